//! Subcommand bodies. Each returns the exit status on success paths and a
//! `Failure` (status plus diagnostic) otherwise.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use broadwell::bounds::certify;
use broadwell::data::{
    check_compatibility, BoundaryData, DEFAULT_COMPAT_SAMPLES, DEFAULT_COMPAT_TOL,
};
use broadwell::oracle::{
    compare, free_streaming_exact, upwind_solve, ComparisonReport, UpwindConfig,
};
use broadwell::picard::{solve, IterationReport, SolveConfig, SolveError};
use broadwell::{Error, Field4, GridSpec};
use serde::Serialize;

use crate::config::{GridDims, Reference, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INCOMPATIBLE: i32 = 4;
pub const EXIT_THRESHOLD: i32 = 5;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Usage(_) | Error::Data(_) | Error::Domain { .. } | Error::Json(_) => EXIT_USAGE,
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            Error::Internal(_) => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: format!("serializing report: {e}"),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let message = e.to_string();
        let code = match e {
            SolveError::Inadmissible(_) => EXIT_INADMISSIBLE,
            SolveError::Incompatible(report) => {
                return Failure {
                    code: EXIT_INCOMPATIBLE,
                    message: format!("{message}\n{}", report.table()),
                }
            }
            SolveError::NotConverged { .. } => EXIT_NOT_CONVERGED,
            SolveError::Numerical { .. } => EXIT_INTERNAL,
            SolveError::Other(err) => return err.into(),
        };
        Failure { code, message }
    }
}

pub type Outcome = Result<i32, Failure>;

pub struct Options {
    pub out: Option<PathBuf>,
    pub force: bool,
    pub snapshots: Option<Vec<usize>>,
}

fn out_dir(cfg: &RunConfig, opts: &Options) -> Result<PathBuf, Failure> {
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| cfg.base_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn solve_config(cfg: &RunConfig, opts: &Options) -> SolveConfig {
    let mut s = cfg.solve;
    s.force |= opts.force;
    s
}

pub fn certify_cmd(cfg: &RunConfig, opts: &Options) -> Outcome {
    let data = cfg.boundary_data()?;
    let cert = certify(&cfg.params, &data, cfg.solve.q_sampling)?;
    write_json(&out_dir(cfg, opts)?.join("certificate.json"), &cert)?;
    println!(
        "p = {:?}  q = {:?}  pq = {:?}  admissible = {}",
        cert.p, cert.q, cert.pq, cert.admissible
    );
    Ok(if cert.admissible {
        EXIT_OK
    } else {
        EXIT_INADMISSIBLE
    })
}

pub fn compat_cmd(cfg: &RunConfig, opts: &Options) -> Outcome {
    let data = cfg.boundary_data()?;
    let report = check_compatibility(&data, DEFAULT_COMPAT_SAMPLES, DEFAULT_COMPAT_TOL)?;
    write_json(&out_dir(cfg, opts)?.join("compatibility.json"), &report)?;
    print!("{}", report.table());
    if report.passed {
        Ok(EXIT_OK)
    } else {
        Err(Failure {
            code: EXIT_INCOMPATIBLE,
            message: format!(
                "incompatible data: largest edge residual {:e}",
                report.max_residual()
            ),
        })
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    converged: bool,
    iterations: usize,
    final_residual: f64,
    min_value: f64,
    grid: GridSpec,
    quadrature_step: f64,
    snapshots: Vec<String>,
    report: &'a IterationReport,
}

pub fn solve_cmd(cfg: &RunConfig, opts: &Options) -> Outcome {
    let data = cfg.boundary_data()?;
    let grid = cfg.grid()?;
    let quad = cfg.quadrature()?;
    let snaps = match &opts.snapshots {
        Some(s) => {
            cfg.check_snapshots(s)?;
            s.clone()
        }
        None => cfg
            .snapshots
            .clone()
            .unwrap_or_else(|| vec![0, grid.nt - 1]),
    };
    let (field, report, code) =
        match solve(&data, &cfg.params, &grid, &quad, &solve_config(cfg, opts)) {
            Ok((f, r)) => (f, r, EXIT_OK),
            Err(SolveError::NotConverged { field, report }) => {
                eprintln!(
                    "no convergence after {} iterations, last residual {:e}",
                    report.iterations,
                    report.final_residual()
                );
                (*field, *report, EXIT_NOT_CONVERGED)
            }
            Err(e) => return Err(e.into()),
        };
    let dir = out_dir(cfg, opts)?;
    let mut names = Vec::new();
    for &n in &snaps {
        let name = format!("snapshot_t{n:04}.csv");
        field.write_snapshot_csv(n, BufWriter::new(File::create(dir.join(&name))?))?;
        names.push(name);
    }
    fs::write(dir.join("iterations.log"), report.log())?;
    write_json(&dir.join("certificate.json"), &report.certificate)?;
    let summary = Summary {
        converged: report.converged,
        iterations: report.iterations,
        final_residual: report.final_residual(),
        min_value: report.min_value(),
        grid,
        quadrature_step: quad.max_step,
        snapshots: names,
        report: &report,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "converged = {}  iterations = {}  residual = {:e}  min = {:?}",
        report.converged,
        report.iterations,
        report.final_residual(),
        report.min_value()
    );
    Ok(code)
}

#[derive(Serialize)]
struct Level {
    grid: GridSpec,
    reference_grid: GridSpec,
    comparison: ComparisonReport,
}

#[derive(Serialize)]
struct Verification {
    reference: &'static str,
    threshold: f64,
    passed: bool,
    levels: Vec<Level>,
    /// Sup-difference on the coarse level over the refined one.
    error_ratio: Option<f64>,
}

fn picard_field(
    cfg: &RunConfig,
    data: &BoundaryData,
    grid: &GridSpec,
    scfg: &SolveConfig,
) -> Result<Field4, Failure> {
    let quad = cfg.quadrature_for(grid)?;
    Ok(solve(data, &cfg.params, grid, &quad, scfg)?.0)
}

fn reference_field(
    cfg: &RunConfig,
    data: &BoundaryData,
    grid: &GridSpec,
    scfg: &SolveConfig,
) -> Result<Field4, Failure> {
    let v = &cfg.verify;
    Ok(match v.reference {
        Reference::Upwind => {
            let mut u = UpwindConfig::new(*grid);
            u.cfl = v.cfl;
            upwind_solve(data, &cfg.params, &u)?
        }
        Reference::FreeStreaming => free_streaming_exact(data, &cfg.params, grid)?,
        Reference::Picard => picard_field(cfg, data, grid, scfg)?,
    })
}

pub fn verify_cmd(cfg: &RunConfig, opts: &Options) -> Outcome {
    let data = cfg.boundary_data()?;
    let scfg = solve_config(cfg, opts);
    let v = &cfg.verify;
    let mut dims: Vec<(GridDims, GridDims)> =
        vec![(cfg.grid, v.reference_grid.unwrap_or(cfg.grid))];
    if v.refine {
        let (g, r) = dims[0];
        dims.push((g.refined(), r.refined()));
    }
    let mut levels = Vec::new();
    for (g, r) in dims {
        let grid = g.spec(cfg.domain)?;
        let reference_grid = r.spec(cfg.domain)?;
        let ours = picard_field(cfg, &data, &grid, &scfg)?;
        let theirs = reference_field(cfg, &data, &reference_grid, &scfg)?;
        let comparison = compare(&ours, &theirs)?;
        println!(
            "grid {}  reference {}  sup = {:e}  rms = {:e}",
            comparison.grid_a,
            comparison.grid_b,
            comparison.sup_difference,
            comparison.rms_difference
        );
        levels.push(Level {
            grid,
            reference_grid,
            comparison,
        });
    }
    let error_ratio = match levels.as_slice() {
        [a, b] if b.comparison.sup_difference > 0.0 => {
            Some(a.comparison.sup_difference / b.comparison.sup_difference)
        }
        _ => None,
    };
    let last = levels.last().map_or(0.0, |l| l.comparison.sup_difference);
    let passed = last <= v.threshold;
    let report = Verification {
        reference: match v.reference {
            Reference::Upwind => "upwind",
            Reference::FreeStreaming => "free_streaming",
            Reference::Picard => "picard",
        },
        threshold: v.threshold,
        passed,
        levels,
        error_ratio,
    };
    write_json(&out_dir(cfg, opts)?.join("comparison.json"), &report)?;
    if let Some(r) = error_ratio {
        println!("error ratio = {r:?}");
    }
    if passed {
        Ok(EXIT_OK)
    } else {
        Err(Failure {
            code: EXIT_THRESHOLD,
            message: format!(
                "sup-difference {last:e} exceeds threshold {:e}",
                v.threshold
            ),
        })
    }
}
