//! Existence and uniqueness constants: growth constant `p`, data constant
//! `q`, Lipschitz constant `p′`, the admissibility test `pq ≤ 1/4` and the
//! window of radii `R` with `pR² − R + q ≤ 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{BoundaryData, DataFunction};
use crate::error::{usage, Result};
use crate::fields::c1_norm;
use crate::model::{ModelParams, SpaceTimeBox};

/// Lattice points per axis when estimating data norms.
pub const DEFAULT_Q_SAMPLING: usize = 256;

/// The S-independent geometric constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    /// `max{1 + 2T(c cosθ + c sinθ), 2T}`.
    pub beta_t: f64,
    /// `max{1/(c cosθ), 1/(c sinθ)} + 2 max{1/(c cosθ), 1/(c sinθ), (1/(c cosθ))(1/(c cosθ) + tanθ), (1/(c sinθ))(1/(c sinθ) + cotθ)} · max{b1 − a1, b2 − a2}`.
    pub beta: f64,
    /// `max{(b1−a1)/(c cosθ), (b2−a2)/(c sinθ), (b1−a1)/(c sinθ), (b2−a2)/(c cosθ)}`.
    pub alpha: f64,
}

pub fn geometry(params: &ModelParams, domain: &SpaceTimeBox) -> Geometry {
    let (c, cs, sn) = (params.c(), params.cos_theta(), params.sin_theta());
    let t = domain.t_end;
    let (l1, l2) = (domain.width(), domain.height());
    let ic = 1.0 / (c * cs);
    let is = 1.0 / (c * sn);
    let tan = sn / cs;
    let cot = cs / sn;
    let beta_t = (1.0 + 2.0 * t * (c * cs + c * sn)).max(2.0 * t);
    let inner = ic.max(is).max(ic * (ic + tan)).max(is * (is + cot));
    let beta = ic.max(is) + 2.0 * inner * l1.max(l2);
    let alpha = (l1 * ic).max(l2 * is).max(l1 * is).max(l2 * ic);
    Geometry {
        beta_t,
        beta,
        alpha,
    }
}

/// `p = 4cS · max{β_T, β}`.
pub fn compute_p(params: &ModelParams, domain: &SpaceTimeBox) -> f64 {
    let g = geometry(params, domain);
    2.0 * params.collision_rate() * g.beta_t.max(g.beta)
}

/// `p′ = 4cS · max{T, α}`.
pub fn compute_p_prime(params: &ModelParams, domain: &SpaceTimeBox) -> f64 {
    let g = geometry(params, domain);
    2.0 * params.collision_rate() * domain.t_end.max(g.alpha)
}

/// Weights on the data norms: `max{1, c cosθ + c sinθ}` for initial data,
/// `max{1, 1/(c cosθ) + tanθ}` or `max{1, 1/(c sinθ) + cotθ}` for the faces.
pub fn data_weights(params: &ModelParams) -> DataWeights {
    let (c, cs, sn) = (params.c(), params.cos_theta(), params.sin_theta());
    let initial = 1.0f64.max(c * cs + c * sn);
    let w_cos = 1.0f64.max(1.0 / (c * cs) + sn / cs);
    let w_sin = 1.0f64.max(1.0 / (c * sn) + cs / sn);
    DataWeights {
        initial: [initial; 4],
        // N1^-, N2^+, N3^-, N4^+
        x_inflow: [w_cos, w_sin, w_sin, w_cos],
        // N1^--, N2^--, N3^++, N4^++
        y_inflow: [w_sin, w_cos, w_cos, w_sin],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataWeights {
    pub initial: [f64; 4],
    pub x_inflow: [f64; 4],
    pub y_inflow: [f64; 4],
}

/// One term of the data constant.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedNorm {
    pub function: &'static str,
    pub weight: f64,
    pub c1_norm: f64,
}

/// `‖g‖₁` and its weight for each of the twelve data functions.
pub fn data_norms(
    data: &BoundaryData,
    params: &ModelParams,
    sampling: usize,
) -> Result<Vec<WeightedNorm>> {
    if sampling < 2 {
        return Err(usage(format!(
            "norm sampling needs at least 2 points per axis, got {sampling}"
        )));
    }
    let w = data_weights(params);
    let mut jobs: Vec<(&DataFunction, f64)> = Vec::with_capacity(12);
    for k in 0..4 {
        jobs.push((data.initial(k), w.initial[k]));
    }
    for k in 0..4 {
        jobs.push((data.x_inflow(k), w.x_inflow[k]));
    }
    for k in 0..4 {
        jobs.push((data.y_inflow(k), w.y_inflow[k]));
    }
    Ok(jobs
        .par_iter()
        .map(|(f, weight)| WeightedNorm {
            function: f.label(),
            weight: *weight,
            c1_norm: c1_norm(
                |a, b| f.value(a, b),
                |a, b| f.gradient(a, b),
                f.rect(),
                sampling,
            ),
        })
        .collect())
}

/// `q`: the largest weighted data norm.
pub fn compute_q(data: &BoundaryData, params: &ModelParams, sampling: usize) -> Result<f64> {
    Ok(data_norms(data, params, sampling)?
        .iter()
        .map(|n| n.weight * n.c1_norm)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub p: f64,
    pub q: f64,
    pub p_prime: f64,
    pub alpha: f64,
    pub beta_t: f64,
    pub beta: f64,
    pub pq: f64,
    pub admissible: bool,
    /// Lower end of the window; `None` when inadmissible.
    pub r_min: Option<f64>,
    /// Upper end of the window; `None` when inadmissible or unbounded (`S = 0`).
    pub r_max: Option<f64>,
    /// `p′/p = max{T, α} / max{β_T, β}`, independent of `S`.
    pub ratio: f64,
    pub sampling: usize,
    pub data_norms: Vec<WeightedNorm>,
}

impl BoundCertificate {
    /// Whether `𝒱 ≤ r` places a field inside the certified ball.
    pub fn in_window(&self, r: f64) -> bool {
        match (self.r_min, self.r_max) {
            (Some(lo), Some(hi)) => r >= lo && r <= hi,
            (Some(lo), None) => r >= lo,
            _ => false,
        }
    }
}

/// Roots of `p r² − r + q`, or `None` when `pq > 1/4`.
pub fn window(p: f64, q: f64) -> Option<(f64, Option<f64>)> {
    if p == 0.0 {
        return Some((q, None));
    }
    let disc = 1.0 - 4.0 * p * q;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // 2q / (1 + √·) equals (1 − √·)/(2p) without the cancellation
    Some((2.0 * q / (1.0 + root), Some((1.0 + root) / (2.0 * p))))
}

pub fn certify(
    params: &ModelParams,
    data: &BoundaryData,
    sampling: usize,
) -> Result<BoundCertificate> {
    let domain = data.domain();
    let g = geometry(params, domain);
    let p = compute_p(params, domain);
    let p_prime = compute_p_prime(params, domain);
    let norms = data_norms(data, params, sampling)?;
    let q = norms
        .iter()
        .map(|n| n.weight * n.c1_norm)
        .fold(0.0, f64::max);
    let pq = p * q;
    let ratio = domain.t_end.max(g.alpha) / g.beta_t.max(g.beta);
    debug_assert!(ratio <= 0.5 + 1e-15, "ratio {ratio}");
    let win = window(p, q);
    Ok(BoundCertificate {
        p,
        q,
        p_prime,
        alpha: g.alpha,
        beta_t: g.beta_t,
        beta: g.beta,
        pq,
        admissible: win.is_some(),
        r_min: win.map(|w| w.0),
        r_max: win.and_then(|w| w.1),
        ratio,
        sampling,
        data_norms: norms,
    })
}
