//! Tabulated data: a CSV file with a header and three columns `a,b,value`
//! listing every node of a rectilinear grid, interpolated bilinearly.

use std::io::Read;
use std::path::Path;

use crate::error::{data, Result};

use super::Profile;

#[derive(Debug, Clone)]
pub struct TableProfile {
    a: Vec<f64>,
    b: Vec<f64>,
    /// `values[i * b.len() + j]` at `(a[i], b[j])`.
    values: Vec<f64>,
}

fn axis_of(coords: &[f64]) -> Vec<f64> {
    let mut v = coords.to_vec();
    v.sort_by(|p, q| p.total_cmp(q));
    v.dedup();
    v
}

fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 {
        return (0, 0.0);
    }
    let v = v.clamp(axis[0], axis[n - 1]);
    let k = axis.partition_point(|&p| p <= v).clamp(1, n - 1) - 1;
    (k, (v - axis[k]) / (axis[k + 1] - axis[k]))
}

impl TableProfile {
    pub fn read(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        if rdr.headers()?.len() != 3 {
            return Err(data("table must have exactly three columns: a, b, value"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut r = [0.0f64; 3];
            for (k, field) in rec.iter().enumerate().take(3) {
                r[k] = field.parse().map_err(|_| {
                    data(format!(
                        "table row {}: cannot parse '{field}'",
                        rows.len() + 2
                    ))
                })?;
            }
            if !r.iter().all(|v| v.is_finite()) {
                return Err(data(format!(
                    "table row {}: non-finite entry",
                    rows.len() + 2
                )));
            }
            rows.push(r);
        }
        let a = axis_of(&rows.iter().map(|r| r[0]).collect::<Vec<_>>());
        let b = axis_of(&rows.iter().map(|r| r[1]).collect::<Vec<_>>());
        if a.len() < 2 || b.len() < 2 || rows.len() != a.len() * b.len() {
            return Err(data(format!(
                "table with {} rows does not cover a full grid ({} x {} distinct coordinates, at least 2 x 2 needed)",
                rows.len(),
                a.len(),
                b.len()
            )));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for r in &rows {
            let i = a.partition_point(|&p| p < r[0]);
            let j = b.partition_point(|&p| p < r[1]);
            values[i * b.len() + j] = r[2];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(data("table has duplicate grid nodes"));
        }
        Ok(TableProfile { a, b, values })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| data(format!("cannot open table {}: {e}", path.display())))?;
        Self::read(file)
    }

    /// `[lo, hi]` covered along each argument.
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.a[0], self.b[0]],
            [*self.a.last().unwrap(), *self.b.last().unwrap()],
        )
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.b.len() + j]
    }
}

impl Profile for TableProfile {
    fn value(&self, a: f64, b: f64) -> f64 {
        let (i, fa) = locate(&self.a, a);
        let (j, fb) = locate(&self.b, b);
        let lo = self.at(i, j) * (1.0 - fb) + self.at(i, j + 1) * fb;
        let hi = self.at(i + 1, j) * (1.0 - fb) + self.at(i + 1, j + 1) * fb;
        lo * (1.0 - fa) + hi * fa
    }
}
