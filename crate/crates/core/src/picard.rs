//! Picard iteration `M_{k+1} = 𝒯(M_k)` (or `𝒯^σ`) to the fixed point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{certify, BoundCertificate, DEFAULT_Q_SAMPLING};
use crate::characteristics::classify;
use crate::data::{
    check_compatibility, BoundaryData, CompatibilityReport, DEFAULT_COMPAT_SAMPLES,
    DEFAULT_COMPAT_TOL,
};
use crate::error::{self, usage, Error, Result};
use crate::fields::{fd_partials, v_functional, Field4, GridSpec};
use crate::model::{collision, ModelParams};
use crate::transport::{apply_t, apply_t_sigma, apply_t_sigma_unchecked, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Mode {
    /// Iterate `𝒯`.
    Plain,
    /// Iterate `𝒯^σ`; `sigma` defaults to `2cS`.
    Sigma {
        #[serde(default)]
        sigma: Option<f64>,
        /// Permit `σ < 2cS`; positivity is then no longer guaranteed.
        #[serde(default)]
        unsafe_sigma: bool,
    },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Sigma {
            sigma: None,
            unsafe_sigma: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Data transported along characteristics with the collision term off.
    #[default]
    FreeStreaming,
    /// Data on the initial slice and the inflow faces, zero elsewhere.
    ZeroExtension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub mode: Mode,
    /// Solve even when the certificate is inadmissible.
    pub force: bool,
    pub positivity_tol: f64,
    pub initial_guess: InitialGuess,
    /// Lattice points per axis for the data norms of the certificate.
    pub q_sampling: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: 200,
            mode: Mode::default(),
            force: false,
            positivity_tol: 1e-12,
            initial_guess: InitialGuess::default(),
            q_sampling: DEFAULT_Q_SAMPLING,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(usage(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(usage("max_iter must be at least 1"));
        }
        if !(self.positivity_tol >= 0.0) {
            return Err(usage("positivity_tol must be non-negative"));
        }
        Ok(())
    }

    /// The σ actually used, or `None` in plain mode.
    pub fn sigma(&self, params: &ModelParams) -> Option<f64> {
        match self.mode {
            Mode::Plain => None,
            Mode::Sigma { sigma, .. } => Some(sigma.unwrap_or(params.collision_rate())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    /// `‖M_k − M_{k−1}‖` for every completed iteration `k ≥ 1`.
    pub residuals: Vec<f64>,
    /// `𝒱(M_k)` from finite-difference partials, `k ≥ 0` (NaN when the grid is too coarse).
    pub v_values: Vec<f64>,
    /// Smallest value of `M_k`, `k ≥ 0`.
    pub min_values: Vec<f64>,
    /// Iterates whose minimum fell below `−positivity_tol`.
    pub positivity_violations: usize,
    pub converged: bool,
    pub iterations: usize,
    pub sigma: Option<f64>,
    pub certificate: BoundCertificate,
}

impl IterationReport {
    /// Successive residual ratios `r_{k+1} / r_k`.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    pub fn min_value(&self) -> f64 {
        self.min_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// One line per iterate: index, residual, `𝒱`, minimum.
    pub fn log(&self) -> String {
        let mut out = String::from("# iteration residual V min\n");
        for k in 0..self.min_values.len() {
            let res = if k == 0 {
                f64::NAN
            } else {
                self.residuals[k - 1]
            };
            out.push_str(&format!(
                "{k} {res:.6e} {:.6e} {:.6e}\n",
                self.v_values[k], self.min_values[k]
            ));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("certificate inadmissible: pq = {} > 1/4 (use force to override)", .0.pq)]
    Inadmissible(Box<BoundCertificate>),
    #[error("incompatible data: largest edge residual {}", .0.max_residual())]
    Incompatible(CompatibilityReport),
    #[error("no convergence after {} iterations, last residual {:e}", .report.iterations, .report.final_residual())]
    NotConverged {
        field: Box<Field4>,
        report: Box<IterationReport>,
    },
    #[error("numerical breakdown at iteration {iteration}: {reason}")]
    Numerical { iteration: usize, reason: String },
    #[error(transparent)]
    Other(#[from] Error),
}

/// Starting field satisfying the initial and inflow conditions.
pub fn initial_guess(
    data: &BoundaryData,
    params: &ModelParams,
    grid: &GridSpec,
    kind: InitialGuess,
) -> Result<Field4> {
    let compat = check_compatibility(data, DEFAULT_COMPAT_SAMPLES, DEFAULT_COMPAT_TOL)?;
    if !compat.passed {
        return Err(error::data(format!(
            "data violate the compatibility conditions (largest edge residual {:e})",
            compat.max_residual()
        )));
    }
    match kind {
        InitialGuess::FreeStreaming => {
            let free = params.collisionless();
            let quad = QuadratureSpec::for_grid(grid, params);
            Ok(apply_t(&Field4::zeros(*grid), data, &free, &quad)?.field)
        }
        InitialGuess::ZeroExtension => {
            let mut f = Field4::zeros(*grid);
            let species = params.all_species();
            for s in &species {
                let slot = s.slot();
                let ix = if s.velocity[0] > 0.0 { 0 } else { grid.nx - 1 };
                let jy = if s.velocity[1] > 0.0 { 0 } else { grid.ny - 1 };
                let lattice = f.lattice_mut(slot);
                for (idx, v) in lattice.iter_mut().enumerate() {
                    let (n, i, j) = grid.unindex(idx);
                    let (t, x, y) = (grid.t(n), grid.x(i), grid.y(j));
                    *v = if n == 0 {
                        data.initial(slot).value(x, y)
                    } else if i == ix {
                        data.x_inflow(slot).value(t, y)
                    } else if j == jy {
                        data.y_inflow(slot).value(t, x)
                    } else {
                        0.0
                    };
                }
            }
            Ok(f)
        }
    }
}

/// `‖𝒯(M) − M‖`.
pub fn residual(
    m: &Field4,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    apply_t(m, data, params, quad)?.field.sup_distance(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResidual {
    /// Largest `|∂_t N_i + u_i ∂_x N_i + v_i ∂_y N_i − sign_i Q(N)|`.
    pub max: f64,
    /// Interior (node, species) pairs that entered the maximum.
    pub samples: usize,
}

/// Central-difference residual of the kinetic equations at interior nodes.
/// Stencils reaching across a region plane of the species are skipped:
/// derivatives of the solution may jump there.
pub fn pde_residual(n: &Field4, params: &ModelParams) -> Result<PdeResidual> {
    let g = *n.grid();
    if g.nt < 3 || g.nx < 3 || g.ny < 3 {
        return Err(usage("pde residual needs at least 3 nodes per axis"));
    }
    let d = g.domain;
    let species = params.all_species();
    let per_plane: Vec<(f64, usize)> = (1..g.nt - 1)
        .into_par_iter()
        .map(|k| -> Result<(f64, usize)> {
            let mut worst = 0.0f64;
            let mut count = 0;
            for i in 1..g.nx - 1 {
                for j in 1..g.ny - 1 {
                    let node = n.node(g.index(k, i, j));
                    let q = collision(&node, params);
                    for s in &species {
                        let region = classify(s, g.t(k), g.x(i), g.y(j), &d)?;
                        let neighbours = [
                            (k - 1, i, j),
                            (k + 1, i, j),
                            (k, i - 1, j),
                            (k, i + 1, j),
                            (k, i, j - 1),
                            (k, i, j + 1),
                        ];
                        let mut straddles = false;
                        for &(a, b, c) in &neighbours {
                            if classify(s, g.t(a), g.x(b), g.y(c), &d)? != region {
                                straddles = true;
                                break;
                            }
                        }
                        if straddles {
                            continue;
                        }
                        let l = n.lattice(s.slot());
                        let dt =
                            (l[g.index(k + 1, i, j)] - l[g.index(k - 1, i, j)]) / (2.0 * g.dt());
                        let dx =
                            (l[g.index(k, i + 1, j)] - l[g.index(k, i - 1, j)]) / (2.0 * g.dx());
                        let dy =
                            (l[g.index(k, i, j + 1)] - l[g.index(k, i, j - 1)]) / (2.0 * g.dy());
                        let [u, v] = s.velocity;
                        worst = worst.max((dt + u * dx + v * dy - s.collision_sign * q).abs());
                        count += 1;
                    }
                }
            }
            Ok((worst, count))
        })
        .collect::<Result<_>>()?;
    Ok(PdeResidual {
        max: per_plane.iter().map(|p| p.0).fold(0.0, f64::max),
        samples: per_plane.iter().map(|p| p.1).sum(),
    })
}

fn v_of(m: &Field4) -> f64 {
    match fd_partials(m) {
        Ok(parts) => v_functional(m, &parts).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

/// Runs the iteration after checking compatibility and the certificate gate.
pub fn solve(
    data: &BoundaryData,
    params: &ModelParams,
    grid: &GridSpec,
    quad: &QuadratureSpec,
    cfg: &SolveConfig,
) -> Result<(Field4, IterationReport), SolveError> {
    cfg.validate()?;
    let compat = check_compatibility(data, DEFAULT_COMPAT_SAMPLES, DEFAULT_COMPAT_TOL)?;
    if !compat.passed {
        return Err(SolveError::Incompatible(compat));
    }
    let certificate = certify(params, data, cfg.q_sampling)?;
    if !certificate.admissible && !cfg.force {
        return Err(SolveError::Inadmissible(Box::new(certificate)));
    }
    let guess = initial_guess(data, params, grid, cfg.initial_guess)?;
    iterate(guess, data, params, quad, cfg, certificate)
}

/// Runs the iteration from a given starting field. No gate.
pub fn iterate(
    start: Field4,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
    cfg: &SolveConfig,
    certificate: BoundCertificate,
) -> Result<(Field4, IterationReport), SolveError> {
    cfg.validate()?;
    let sigma = cfg.sigma(params);
    let unsafe_sigma = matches!(
        cfg.mode,
        Mode::Sigma {
            unsafe_sigma: true,
            ..
        }
    );
    let step = |m: &Field4| -> Result<Field4> {
        Ok(match sigma {
            None => apply_t(m, data, params, quad)?.field,
            Some(s) if unsafe_sigma => apply_t_sigma_unchecked(m, s, data, params, quad)?.field,
            Some(s) => apply_t_sigma(m, s, data, params, quad)?.field,
        })
    };

    let mut report = IterationReport {
        residuals: Vec::new(),
        v_values: vec![v_of(&start)],
        min_values: vec![start.min_value()],
        positivity_violations: 0,
        converged: false,
        iterations: 0,
        sigma,
        certificate,
    };
    let mut m = start;
    for k in 1..=cfg.max_iter {
        let next = step(&m).map_err(|e| match e {
            Error::Data(reason) => SolveError::Numerical {
                iteration: k,
                reason,
            },
            other => SolveError::Other(other),
        })?;
        if !next.is_finite() {
            return Err(SolveError::Numerical {
                iteration: k,
                reason: "iterate contains non-finite values".into(),
            });
        }
        let res = next.sup_distance(&m)?;
        let min = next.min_value();
        if min < -cfg.positivity_tol {
            report.positivity_violations += 1;
        }
        report.residuals.push(res);
        report.v_values.push(v_of(&next));
        report.min_values.push(min);
        report.iterations = k;
        m = next;
        if res <= cfg.tol {
            report.converged = true;
            return Ok((m, report));
        }
    }
    Err(SolveError::NotConverged {
        field: Box::new(m),
        report: Box::new(report),
    })
}
