//! The fixed-point operator `𝒯`, its σ-regularized variant `𝒯^σ` and the
//! derivative operator, evaluated by composite trapezoid quadrature along
//! backward characteristics. Every output node is an independent pure
//! computation and nodes are evaluated in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{characteristic, Characteristic, Region};
use crate::data::BoundaryData;
use crate::error::{self, usage, Result};
use crate::fields::{Field4, FieldPartials, GridSpec, PartialsSource};
use crate::model::{collision, density, regularized_collision, ModelParams, Species};

/// Composite trapezoid rule along characteristics. A characteristic of
/// length `s_max` is split into `ceil(s_max / max_step)` equal steps, so its
/// exit point and evaluation point are always quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub max_step: f64,
}

impl QuadratureSpec {
    pub fn new(max_step: f64) -> Result<Self> {
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(usage(format!(
                "quadrature step must be positive, got {max_step}"
            )));
        }
        Ok(QuadratureSpec { max_step })
    }

    /// `min(Δt, Δx/c, Δy/c)`: one step per grid cell crossed.
    pub fn for_grid(grid: &GridSpec, params: &ModelParams) -> Self {
        let c = params.c();
        QuadratureSpec {
            max_step: grid.dt().min(grid.dx() / c).min(grid.dy() / c),
        }
    }

    /// Number of steps and step length for a characteristic of length `s_max`.
    #[inline]
    pub fn steps(&self, s_max: f64) -> (usize, f64) {
        if s_max <= 0.0 {
            return (0, 0.0);
        }
        let n = ((s_max / self.max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, s_max / n as f64)
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.max_step).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "operator", rename_all = "snake_case")]
pub enum Provenance {
    Plain,
    Regularized { sigma: f64 },
    DerivativeBearing,
}

#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub field: Field4,
    pub partials: Option<FieldPartials>,
    pub provenance: Provenance,
}

fn check_inputs(m: &Field4, data: &BoundaryData, quad: &QuadratureSpec) -> Result<()> {
    quad.validate()?;
    if m.grid().domain != *data.domain() {
        return Err(usage(
            "field grid and boundary data live on different boxes",
        ));
    }
    if !m.is_finite() {
        return Err(error::data("input field contains non-finite values"));
    }
    Ok(())
}

/// Runs `node` over every grid node for each species and assembles a field.
fn per_node<F>(grid: &GridSpec, params: &ModelParams, node: F) -> Result<Field4>
where
    F: Fn(&Species, [f64; 3]) -> Result<f64> + Sync,
{
    let species = params.all_species();
    let mut lattices: Vec<Vec<f64>> = Vec::with_capacity(4);
    for s in &species {
        let lattice = (0..grid.len())
            .into_par_iter()
            .map(|idx| node(s, grid.point(idx)))
            .collect::<Result<Vec<f64>>>()?;
        lattices.push(lattice);
    }
    let lattices: [Vec<f64>; 4] = lattices.try_into().unwrap_or_else(|_| unreachable!());
    Field4::from_lattices(*grid, lattices)
}

/// `𝒯(M)`: data trace at the exit point plus `sign_i ∫ Q(M)` along the
/// backward characteristic.
pub fn apply_t(
    m: &Field4,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<OperatorOutput> {
    check_inputs(m, data, quad)?;
    let domain = *data.domain();
    let collisional = params.collision_rate() != 0.0;
    let field = per_node(m.grid(), params, |s, [t, x, y]| {
        let ch = characteristic(s, t, x, y, &domain)?;
        let trace = ch.trace(data, s);
        if !collisional {
            return Ok(trace);
        }
        Ok(trace + s.collision_sign * integrate_collision(m, &ch, params, quad))
    })?;
    Ok(OperatorOutput {
        field,
        partials: None,
        provenance: Provenance::Plain,
    })
}

#[inline]
fn integrate_collision(
    m: &Field4,
    ch: &Characteristic,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> f64 {
    let (n, h) = quad.steps(ch.s_max);
    if n == 0 {
        return 0.0;
    }
    let q_at = |k: usize| {
        let [t, x, y] = ch.at(k as f64 * h);
        collision(&m.sample_all_clamped(t, x, y), params)
    };
    let mut acc = 0.5 * (q_at(0) + q_at(n));
    for k in 1..n {
        acc += q_at(k);
    }
    acc * h
}

/// `𝒯^σ(M)` with `σ ≥ 2cS`.
pub fn apply_t_sigma(
    m: &Field4,
    sigma: f64,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<OperatorOutput> {
    let floor = params.collision_rate();
    if !(sigma >= floor) {
        return Err(usage(format!(
            "sigma = {sigma} is below the positivity threshold 2cS = {floor}"
        )));
    }
    apply_t_sigma_unchecked(m, sigma, data, params, quad)
}

/// `𝒯^σ(M)` for any finite `σ ≥ 0`. Below `2cS` the output may be negative.
///
/// With `P(s) = ∫_0^s ρ(|M|)` along the characteristic the node value is
/// `∫_0^{s_max} e^{σ(P(s) − P(s_max))} Q_i^σ(|M|) ds + trace · e^{−σ P(s_max)}`;
/// `P` is accumulated by the trapezoid rule on the same nodes. The source
/// integral is written as `∫ (Q_i^σ/ρ) dμ` with `dμ = e^{σ(P − P(s_max))} ρ ds`
/// and the trapezoid rule is applied in `μ`, whose increments are exact
/// given the discrete `P`. Constant equilibria are then reproduced to
/// rounding, and every weight stays non-negative.
pub fn apply_t_sigma_unchecked(
    m: &Field4,
    sigma: f64,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<OperatorOutput> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(usage(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    check_inputs(m, data, quad)?;
    let domain = *data.domain();
    let field = per_node(m.grid(), params, |s, [t, x, y]| {
        let ch = characteristic(s, t, x, y, &domain)?;
        let trace = ch.trace(data, s);
        let (n, h) = quad.steps(ch.s_max);
        if n == 0 {
            return Ok(trace);
        }
        let mut rho = Vec::with_capacity(n + 1);
        let mut src = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let [pt, px, py] = ch.at(k as f64 * h);
            let abs = m.sample_all_clamped(pt, px, py).map(f64::abs);
            rho.push(density(&abs));
            src.push(regularized_collision(s, &abs, sigma, params));
        }
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for k in 1..=n {
            prefix.push(prefix[k - 1] + 0.5 * h * (rho[k - 1] + rho[k]));
        }
        let total = prefix[n];
        // Q_i^σ / ρ; the quotient vanishes with the state since Q_i^σ is quadratic
        let ratio = |k: usize| if rho[k] > 0.0 { src[k] / rho[k] } else { 0.0 };
        let mut acc = 0.0;
        for k in 0..n {
            let dp = prefix[k + 1] - prefix[k];
            let dmu = if sigma > 0.0 {
                (sigma * (prefix[k] - total)).exp() * (sigma * dp).exp_m1() / sigma
            } else {
                dp
            };
            acc += dmu * 0.5 * (ratio(k) + ratio(k + 1));
        }
        Ok(acc + trace * (-sigma * total).exp())
    })?;
    Ok(OperatorOutput {
        field,
        partials: None,
        provenance: Provenance::Regularized { sigma },
    })
}

/// Gradient of `s_max` with respect to `(t, x, y)` inside a region.
fn s_max_gradient(ch: &Characteristic) -> [f64; 3] {
    let [u, v] = ch.velocity;
    match ch.region {
        Region::A => [1.0, 0.0, 0.0],
        Region::B => [0.0, 1.0 / u, 0.0],
        Region::C => [0.0, 0.0, 1.0 / v],
    }
}

/// Space-time components that the data function of each region takes as
/// arguments.
fn trace_components(region: Region) -> [usize; 2] {
    match region {
        Region::A => [1, 2],
        Region::B => [0, 2],
        Region::C => [0, 1],
    }
}

/// Partial derivatives of `𝒯(M)` from the region-wise formulas, given `M`
/// and its partials. Differentiates the trace and the line integral
/// (including the moving endpoint) by the chain rule. Nodes on a region
/// plane use the branch picked by the A > B > C tie-break.
pub fn apply_t_derivatives(
    m: &Field4,
    m_parts: &FieldPartials,
    data: &BoundaryData,
    params: &ModelParams,
    quad: &QuadratureSpec,
    allow_fd_fallback: bool,
) -> Result<FieldPartials> {
    check_inputs(m, data, quad)?;
    if m_parts.grid() != m.grid() {
        return Err(usage("partials and field live on different grids"));
    }
    if !m_parts.is_finite() {
        return Err(error::data("input partials contain non-finite values"));
    }
    let domain = *data.domain();
    let grid = *m.grid();
    let species = params.all_species();
    let mut axes: [Vec<Vec<f64>>; 3] = Default::default();
    for s in &species {
        let nodes = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let [t, x, y] = grid.point(idx);
                let ch = characteristic(s, t, x, y, &domain)?;
                node_derivative(m, m_parts, data, s, &ch, params, quad, allow_fd_fallback)
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        for (axis, out) in axes.iter_mut().enumerate() {
            out.push(nodes.iter().map(|g| g[axis]).collect());
        }
    }
    let [dt, dx, dy] = axes.map(|lattices| {
        let lattices: [Vec<f64>; 4] = lattices.try_into().unwrap_or_else(|_| unreachable!());
        Field4::from_lattices(grid, lattices)
    });
    Ok(FieldPartials {
        dt: dt?,
        dx: dx?,
        dy: dy?,
        source: PartialsSource::Characteristic,
    })
}

#[allow(clippy::too_many_arguments)]
fn node_derivative(
    m: &Field4,
    m_parts: &FieldPartials,
    data: &BoundaryData,
    s: &Species,
    ch: &Characteristic,
    params: &ModelParams,
    quad: &QuadratureSpec,
    allow_fd_fallback: bool,
) -> Result<[f64; 3]> {
    let rate = params.collision_rate();
    let d = [1.0, ch.velocity[0], ch.velocity[1]];
    let gs = s_max_gradient(ch);
    // direction in which the exit point moves when the evaluation point moves along axis z
    let moved = |z: usize| -> [f64; 3] {
        std::array::from_fn(|k| if k == z { 1.0 } else { 0.0 } - gs[z] * d[k])
    };

    let g = ch.trace_gradient(data, s, allow_fd_fallback)?;
    let comps = trace_components(ch.region);
    let mut out: [f64; 3] = std::array::from_fn(|z| {
        let e = moved(z);
        g[0] * e[comps[0]] + g[1] * e[comps[1]]
    });
    if rate == 0.0 {
        return Ok(out);
    }

    let grad_q = |p: [f64; 3]| -> [f64; 3] {
        let n = m.sample_all_clamped(p[0], p[1], p[2]);
        let dn = m_parts.sample_all_clamped(p[0], p[1], p[2]);
        std::array::from_fn(|a| {
            let da = &dn[a];
            rate * (da[1] * n[2] + n[1] * da[2] - da[0] * n[3] - n[0] * da[3])
        })
    };
    let q_end = collision(
        &m.sample_all_clamped(ch.origin[0], ch.origin[1], ch.origin[2]),
        params,
    );

    let (n, h) = quad.steps(ch.s_max);
    let mut integral = [0.0; 3];
    if n > 0 {
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            let gq = grad_q(ch.at(k as f64 * h));
            for (z, acc) in integral.iter_mut().enumerate() {
                let e = moved(z);
                *acc += w * (gq[0] * e[0] + gq[1] * e[1] + gq[2] * e[2]);
            }
        }
    }
    for z in 0..3 {
        out[z] += s.collision_sign * (q_end * gs[z] + integral[z]);
    }
    Ok(out)
}
