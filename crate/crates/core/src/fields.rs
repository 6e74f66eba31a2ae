//! Uniform space-time lattices for the four densities.
//!
//! Node `(n, i, j)` sits at `(t_n, x_i, y_j)` with the first and last node of
//! every axis landing exactly on the box faces. Lattices are stored with `y`
//! fastest, then `x`, then `t`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::model::SpaceTimeBox;

/// Absolute slack used when deciding whether a point lies in the box.
pub const DOMAIN_TOL: f64 = 1e-12;

// Fractional cell offsets closer than this to a node snap onto it, so that
// sampling at a node returns the stored value bit for bit.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub domain: SpaceTimeBox,
}

impl GridSpec {
    pub fn new(nt: usize, nx: usize, ny: usize, domain: SpaceTimeBox) -> Result<Self> {
        if nt < 2 || nx < 2 || ny < 2 {
            return Err(usage(format!(
                "grid needs at least 2 nodes per axis, got {nt}x{nx}x{ny}"
            )));
        }
        Ok(GridSpec { nt, nx, ny, domain })
    }

    /// `n × n × n` grid.
    pub fn cube(n: usize, domain: SpaceTimeBox) -> Result<Self> {
        Self::new(n, n, n, domain)
    }

    pub fn dt(&self) -> f64 {
        self.domain.t_end / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.domain.width() / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.domain.height() / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, n: usize, i: usize, j: usize) -> usize {
        (n * self.nx + i) * self.ny + j
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let j = idx % self.ny;
        let rest = idx / self.ny;
        (rest / self.nx, rest % self.nx, j)
    }

    pub fn t(&self, n: usize) -> f64 {
        axis_node(0.0, self.domain.t_end, self.nt, n)
    }

    pub fn x(&self, i: usize) -> f64 {
        axis_node(self.domain.a1, self.domain.b1, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        axis_node(self.domain.a2, self.domain.b2, self.ny, j)
    }

    /// Coordinates of the node with flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (n, i, j) = self.unindex(idx);
        [self.t(n), self.x(i), self.y(j)]
    }

    /// Interpolation stencil for a point; `None` when outside the box beyond
    /// [`DOMAIN_TOL`].
    pub fn stencil(&self, t: f64, x: f64, y: f64) -> Option<Stencil> {
        if !self.domain.contains(t, x, y, DOMAIN_TOL) {
            return None;
        }
        Some(self.stencil_clamped(t, x, y))
    }

    /// Stencil for a point assumed to be inside the box; coordinates are
    /// clamped onto the box first.
    pub fn stencil_clamped(&self, t: f64, x: f64, y: f64) -> Stencil {
        let d = &self.domain;
        let (n0, wt) = locate(t, 0.0, d.t_end, self.nt);
        let (i0, wx) = locate(x, d.a1, d.b1, self.nx);
        let (j0, wy) = locate(y, d.a2, d.b2, self.ny);
        let base = self.index(n0, i0, j0);
        let st = self.nx * self.ny;
        let sx = self.ny;
        Stencil {
            offsets: [
                base,
                base + 1,
                base + sx,
                base + sx + 1,
                base + st,
                base + st + 1,
                base + st + sx,
                base + st + sx + 1,
            ],
            weights: [
                (1.0 - wt) * (1.0 - wx) * (1.0 - wy),
                (1.0 - wt) * (1.0 - wx) * wy,
                (1.0 - wt) * wx * (1.0 - wy),
                (1.0 - wt) * wx * wy,
                wt * (1.0 - wx) * (1.0 - wy),
                wt * (1.0 - wx) * wy,
                wt * wx * (1.0 - wy),
                wt * wx * wy,
            ],
        }
    }
}

fn axis_node(lo: f64, hi: f64, count: usize, k: usize) -> f64 {
    let f = k as f64 / (count - 1) as f64;
    if k + 1 == count {
        hi
    } else {
        lo * (1.0 - f) + hi * f
    }
}

/// Lower cell index and fractional offset of `v` on a uniform axis.
fn locate(v: f64, lo: f64, hi: f64, count: usize) -> (usize, f64) {
    let cells = (count - 1) as f64;
    let f = ((v - lo) / (hi - lo) * cells).clamp(0.0, cells);
    let nearest = f.round();
    let f = if (f - nearest).abs() < NODE_SNAP {
        nearest
    } else {
        f
    };
    let k = (f.floor() as usize).min(count - 2);
    (k, f - k as f64)
}

/// The eight corner offsets and trilinear weights of one cell.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    offsets: [usize; 8],
    weights: [f64; 8],
}

impl Stencil {
    #[inline]
    pub fn apply(&self, lattice: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..8 {
            let w = self.weights[k];
            if w != 0.0 {
                acc += w * lattice[self.offsets[k]];
            }
        }
        acc
    }
}

/// Four density lattices over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field4 {
    grid: GridSpec,
    lattices: [Vec<f64>; 4],
}

impl Field4 {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Field4 {
            grid,
            lattices: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    pub fn constant(grid: GridSpec, levels: [f64; 4]) -> Self {
        let n = grid.len();
        Field4 {
            grid,
            lattices: levels.map(|v| vec![v; n]),
        }
    }

    /// Field sampled from `f(t, x, y)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> [f64; 4]) -> Self {
        let mut out = Field4::zeros(grid);
        for idx in 0..grid.len() {
            let [t, x, y] = grid.point(idx);
            let v = f(t, x, y);
            for (k, lat) in out.lattices.iter_mut().enumerate() {
                lat[idx] = v[k];
            }
        }
        out
    }

    pub fn from_lattices(grid: GridSpec, lattices: [Vec<f64>; 4]) -> Result<Self> {
        if lattices.iter().any(|l| l.len() != grid.len()) {
            return Err(usage("lattice length does not match grid"));
        }
        Ok(Field4 { grid, lattices })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lattice(&self, slot: usize) -> &[f64] {
        &self.lattices[slot]
    }

    pub fn lattice_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.lattices[slot]
    }

    pub fn lattices(&self) -> &[Vec<f64>; 4] {
        &self.lattices
    }

    pub fn into_lattices(self) -> [Vec<f64>; 4] {
        self.lattices
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 4] {
        std::array::from_fn(|k| self.lattices[k][idx])
    }

    pub fn get(&self, slot: usize, n: usize, i: usize, j: usize) -> f64 {
        self.lattices[slot][self.grid.index(n, i, j)]
    }

    /// Trilinear value of species `index` (1-based) at `(t, x, y)`.
    pub fn sample(&self, index: usize, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(1..=4).contains(&index) {
            return Err(usage(format!("species index must be 1..=4, got {index}")));
        }
        let st = self
            .grid
            .stencil(t, x, y)
            .ok_or(Error::Domain { t, x, y })?;
        Ok(st.apply(&self.lattices[index - 1]))
    }

    /// All four densities at a point that is known to be inside the box.
    #[inline]
    pub fn sample_all_clamped(&self, t: f64, x: f64, y: f64) -> [f64; 4] {
        let st = self.grid.stencil_clamped(t, x, y);
        std::array::from_fn(|k| st.apply(&self.lattices[k]))
    }

    pub fn is_finite(&self) -> bool {
        self.lattices.iter().flatten().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.lattices
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `‖f‖ = max_i ‖f_i‖_∞` over nodes.
    pub fn sup_norm(&self) -> f64 {
        sup_norm(self)
    }

    /// `‖self − other‖`; grids must match.
    pub fn sup_distance(&self, other: &Field4) -> Result<f64> {
        if self.grid != other.grid {
            return Err(usage("sup_distance on fields with different grids"));
        }
        Ok(self
            .lattices
            .iter()
            .zip(&other.lattices)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max))
    }

    /// Componentwise `self + scale·other`.
    pub fn axpy(&self, scale: f64, other: &Field4) -> Result<Field4> {
        if self.grid != other.grid {
            return Err(usage("axpy on fields with different grids"));
        }
        let lattices = std::array::from_fn(|k| {
            self.lattices[k]
                .iter()
                .zip(&other.lattices[k])
                .map(|(a, b)| a + scale * b)
                .collect()
        });
        Ok(Field4 {
            grid: self.grid,
            lattices,
        })
    }

    pub fn scaled(&self, factor: f64) -> Field4 {
        Field4 {
            grid: self.grid,
            lattices: std::array::from_fn(|k| {
                self.lattices[k].iter().map(|v| v * factor).collect()
            }),
        }
    }

    /// Writes the slice `t = t_n` as CSV with columns `t,x,y,N1,N2,N3,N4`,
    /// `x` outer and `y` inner, every number at round-trip precision.
    pub fn write_snapshot_csv<W: Write>(&self, time_index: usize, out: W) -> Result<()> {
        let g = &self.grid;
        if time_index >= g.nt {
            return Err(usage(format!(
                "snapshot index {time_index} out of range (nt = {})",
                g.nt
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "N1", "N2", "N3", "N4"])?;
        let t = g.t(time_index);
        for i in 0..g.nx {
            for j in 0..g.ny {
                let idx = g.index(time_index, i, j);
                let v = self.node(idx);
                let row = [t, g.x(i), g.y(j), v[0], v[1], v[2], v[3]];
                w.write_record(row.iter().map(|v| format!("{v:?}")))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `max_i ‖f_i‖_∞` over lattice nodes.
pub fn sup_norm(f: &Field4) -> f64 {
    f.lattices
        .iter()
        .flatten()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

/// How a set of partial-derivative lattices was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialsSource {
    FiniteDifference,
    Characteristic,
    Exact,
}

/// `∂/∂t`, `∂/∂x`, `∂/∂y` lattices of all four species.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPartials {
    pub dt: Field4,
    pub dx: Field4,
    pub dy: Field4,
    pub source: PartialsSource,
}

impl FieldPartials {
    pub fn grid(&self) -> &GridSpec {
        self.dt.grid()
    }

    /// Partials of the four species at a point inside the box, as
    /// `[axis][species]` with axis order `t, x, y`.
    #[inline]
    pub fn sample_all_clamped(&self, t: f64, x: f64, y: f64) -> [[f64; 4]; 3] {
        let st = self.grid().stencil_clamped(t, x, y);
        [&self.dt, &self.dx, &self.dy].map(|f| std::array::from_fn(|k| st.apply(f.lattice(k))))
    }

    /// Component lattice by axis (0 = t, 1 = x, 2 = y).
    pub fn axis(&self, axis: usize) -> &Field4 {
        match axis {
            0 => &self.dt,
            1 => &self.dx,
            _ => &self.dy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dt.is_finite() && self.dx.is_finite() && self.dy.is_finite()
    }
}

/// Second-order finite-difference partials: central in the interior,
/// one-sided three-point at the faces.
pub fn fd_partials(f: &Field4) -> Result<FieldPartials> {
    let g = *f.grid();
    if g.nt < 3 || g.nx < 3 || g.ny < 3 {
        return Err(usage(format!(
            "finite-difference partials need at least 3 nodes per axis, got {}x{}x{}",
            g.nt, g.nx, g.ny
        )));
    }
    let strides = [g.nx * g.ny, g.ny, 1];
    let counts = [g.nt, g.nx, g.ny];
    let steps = [g.dt(), g.dx(), g.dy()];
    let mut axes: Vec<Field4> = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut out = Field4::zeros(g);
        for slot in 0..4 {
            let src = f.lattice(slot);
            let dst = out.lattice_mut(slot);
            for (idx, d) in dst.iter_mut().enumerate() {
                let (n, i, j) = g.unindex(idx);
                let k = [n, i, j][axis];
                let s = strides[axis];
                let h = steps[axis];
                *d = if k == 0 {
                    (-3.0 * src[idx] + 4.0 * src[idx + s] - src[idx + 2 * s]) / (2.0 * h)
                } else if k + 1 == counts[axis] {
                    (3.0 * src[idx] - 4.0 * src[idx - s] + src[idx - 2 * s]) / (2.0 * h)
                } else {
                    (src[idx + s] - src[idx - s]) / (2.0 * h)
                };
            }
        }
        axes.push(out);
    }
    let dy = axes.pop().expect("three axes");
    let dx = axes.pop().expect("three axes");
    let dt = axes.pop().expect("three axes");
    Ok(FieldPartials {
        dt,
        dx,
        dy,
        source: PartialsSource::FiniteDifference,
    })
}

/// `𝒱(f) = max{‖f‖, ‖∂f/∂t‖, ‖∂f/∂x‖, ‖∂f/∂y‖}`.
pub fn v_functional(f: &Field4, parts: &FieldPartials) -> Result<f64> {
    if parts.grid() != f.grid() || parts.dx.grid() != f.grid() || parts.dy.grid() != f.grid() {
        return Err(usage("partials were computed on a different grid"));
    }
    Ok(sup_norm(f)
        .max(sup_norm(&parts.dt))
        .max(sup_norm(&parts.dx))
        .max(sup_norm(&parts.dy)))
}

/// Axis-aligned rectangle `[lo0, hi0] × [lo1, hi1]` in the two arguments of a
/// data function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, a: f64, b: f64, tol: f64) -> bool {
        a >= self.lo[0] - tol
            && a <= self.hi[0] + tol
            && b >= self.lo[1] - tol
            && b <= self.hi[1] + tol
    }

    pub fn clamp(&self, a: f64, b: f64) -> (f64, f64) {
        (
            a.clamp(self.lo[0], self.hi[0]),
            b.clamp(self.lo[1], self.hi[1]),
        )
    }

    /// Point `k0/(n-1), k1/(n-1)` of the way across.
    pub fn lattice_point(&self, k0: usize, k1: usize, n: usize) -> (f64, f64) {
        (
            axis_node(self.lo[0], self.hi[0], n, k0),
            axis_node(self.lo[1], self.hi[1], n, k1),
        )
    }
}

/// `‖g‖₁ = max{‖g‖_∞, ‖∂g/∂a‖_∞, ‖∂g/∂b‖_∞}` estimated on a
/// `resolution × resolution` lattice covering `rect`.
pub fn c1_norm(
    value: impl Fn(f64, f64) -> f64,
    gradient: impl Fn(f64, f64) -> [f64; 2],
    rect: &Rect,
    resolution: usize,
) -> f64 {
    let n = resolution.max(2);
    let mut best = 0.0f64;
    for k0 in 0..n {
        for k1 in 0..n {
            let (a, b) = rect.lattice_point(k0, k1, n);
            let g = gradient(a, b);
            best = best.max(value(a, b).abs()).max(g[0].abs()).max(g[1].abs());
        }
    }
    best
}
