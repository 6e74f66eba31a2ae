//! Initial and inflow data: the twelve functions `N_i^0`, `N1^-`, `N1^--`,
//! `N2^+`, `N2^--`, `N3^-`, `N3^++`, `N4^+`, `N4^++` as samplers over their
//! rectangles, the compatibility check along shared edges, and built-in data
//! families.
//!
//! Each species has one initial function over `[a1,b1]×[a2,b2]`, one
//! x-inflow function over `(t, y) ∈ [0,T]×[a2,b2]` living on its x-inflow face
//! and one y-inflow function over `(t, x) ∈ [0,T]×[a1,b1]` on its y-inflow face.

pub mod expr;
pub mod spec;
pub mod table;

pub use spec::DataSpec;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{data, usage, Result};
use crate::fields::Rect;
use crate::model::{ModelParams, SpaceTimeBox, Species};

/// Default absolute tolerance for the compatibility identities.
pub const DEFAULT_COMPAT_TOL: f64 = 1e-9;

/// Default number of samples per edge in the compatibility check.
pub const DEFAULT_COMPAT_SAMPLES: usize = 257;

/// Relative step for finite-difference gradients of data without analytic
/// derivatives.
pub const FD_GRADIENT_STEP: f64 = 1e-6;

/// A function of two variables. Implementations must be pure.
pub trait Profile: Send + Sync {
    fn value(&self, a: f64, b: f64) -> f64;

    /// Analytic gradient `(∂/∂a, ∂/∂b)`, when known.
    fn gradient(&self, _a: f64, _b: f64) -> Option<[f64; 2]> {
        None
    }
}

/// A function of `(t, x, y)` used to generate data by restriction.
pub trait FieldProfile: Send + Sync {
    fn value(&self, t: f64, x: f64, y: f64) -> f64;

    /// Analytic gradient `(∂/∂t, ∂/∂x, ∂/∂y)`, when known.
    fn gradient(&self, _t: f64, _x: f64, _y: f64) -> Option<[f64; 3]> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Profile for Constant {
    fn value(&self, _: f64, _: f64) -> f64 {
        self.0
    }
    fn gradient(&self, _: f64, _: f64) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
}

impl FieldProfile for Constant {
    fn value(&self, _: f64, _: f64, _: f64) -> f64 {
        self.0
    }
    fn gradient(&self, _: f64, _: f64, _: f64) -> Option<[f64; 3]> {
        Some([0.0; 3])
    }
}

/// Closure-backed profile, optionally with an analytic gradient.
pub struct FnProfile<F, G = fn(f64, f64) -> [f64; 2]> {
    value: F,
    gradient: Option<G>,
}

impl<F> FnProfile<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    pub fn new(value: F) -> Self {
        FnProfile {
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnProfile<F, G>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
    G: Fn(f64, f64) -> [f64; 2] + Send + Sync,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        FnProfile {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> Profile for FnProfile<F, G>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
    G: Fn(f64, f64) -> [f64; 2] + Send + Sync,
{
    fn value(&self, a: f64, b: f64) -> f64 {
        (self.value)(a, b)
    }
    fn gradient(&self, a: f64, b: f64) -> Option<[f64; 2]> {
        self.gradient.as_ref().map(|g| g(a, b))
    }
}

/// Closure-backed space-time profile, optionally with an analytic gradient.
pub struct FnField<F, G = fn(f64, f64, f64) -> [f64; 3]> {
    value: F,
    gradient: Option<G>,
}

impl<F> FnField<F>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    pub fn new(value: F) -> Self {
        FnField {
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
    G: Fn(f64, f64, f64) -> [f64; 3] + Send + Sync,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        FnField {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> FieldProfile for FnField<F, G>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
    G: Fn(f64, f64, f64) -> [f64; 3] + Send + Sync,
{
    fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.value)(t, x, y)
    }
    fn gradient(&self, t: f64, x: f64, y: f64) -> Option<[f64; 3]> {
        self.gradient.as_ref().map(|g| g(t, x, y))
    }
}

/// `g(t, x, y) = φ(x − u t, y − v t)`: a profile carried along one velocity.
pub struct Transported {
    pub profile: Arc<dyn Profile>,
    pub velocity: [f64; 2],
}

impl FieldProfile for Transported {
    fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        let [u, v] = self.velocity;
        self.profile.value(x - u * t, y - v * t)
    }

    fn gradient(&self, t: f64, x: f64, y: f64) -> Option<[f64; 3]> {
        let [u, v] = self.velocity;
        let [gx, gy] = self.profile.gradient(x - u * t, y - v * t)?;
        Some([-u * gx - v * gy, gx, gy])
    }
}

/// Which slice of the box a restricted function lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slice {
    /// `t = 0`, arguments `(x, y)`.
    Initial,
    /// `x = x_f`, arguments `(t, y)`.
    XFace(f64),
    /// `y = y_f`, arguments `(t, x)`.
    YFace(f64),
}

struct Restricted {
    field: Arc<dyn FieldProfile>,
    slice: Slice,
}

impl Profile for Restricted {
    fn value(&self, a: f64, b: f64) -> f64 {
        match self.slice {
            Slice::Initial => self.field.value(0.0, a, b),
            Slice::XFace(xf) => self.field.value(a, xf, b),
            Slice::YFace(yf) => self.field.value(a, b, yf),
        }
    }

    fn gradient(&self, a: f64, b: f64) -> Option<[f64; 2]> {
        match self.slice {
            Slice::Initial => self.field.gradient(0.0, a, b).map(|g| [g[1], g[2]]),
            Slice::XFace(xf) => self.field.gradient(a, xf, b).map(|g| [g[0], g[2]]),
            Slice::YFace(yf) => self.field.gradient(a, b, yf).map(|g| [g[0], g[1]]),
        }
    }
}

/// One named data function together with its rectangle.
#[derive(Clone)]
pub struct DataFunction {
    label: &'static str,
    profile: Arc<dyn Profile>,
    rect: Rect,
}

impl fmt::Debug for DataFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DataFunction")
            .field("label", &self.label)
            .field("rect", &self.rect)
            .finish_non_exhaustive()
    }
}

impl DataFunction {
    pub fn new(label: &'static str, profile: Arc<dyn Profile>, rect: Rect) -> Self {
        DataFunction {
            label,
            profile,
            rect,
        }
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    /// Value at `(a, b)`, clamped onto the rectangle first.
    #[inline]
    pub fn value(&self, a: f64, b: f64) -> f64 {
        let (a, b) = self.rect.clamp(a, b);
        self.profile.value(a, b)
    }

    pub fn has_exact_gradient(&self) -> bool {
        let (a, b) = self.rect.lattice_point(0, 0, 2);
        self.profile.gradient(a, b).is_some()
    }

    /// Analytic gradient when available, else a finite difference with step
    /// `1e-6 ×` edge length (one-sided at the rectangle edges).
    pub fn gradient(&self, a: f64, b: f64) -> [f64; 2] {
        let (a, b) = self.rect.clamp(a, b);
        if let Some(g) = self.profile.gradient(a, b) {
            return g;
        }
        self.fd_gradient(a, b)
    }

    /// Like [`gradient`](Self::gradient) but refuses to fall back to finite
    /// differences unless `allow_fallback` is set.
    pub fn try_gradient(&self, a: f64, b: f64, allow_fallback: bool) -> Result<[f64; 2]> {
        let (a, b) = self.rect.clamp(a, b);
        match self.profile.gradient(a, b) {
            Some(g) => Ok(g),
            None if allow_fallback => Ok(self.fd_gradient(a, b)),
            None => Err(data(format!(
                "{} has no derivative sampler and finite-difference fallback is disabled",
                self.label
            ))),
        }
    }

    fn fd_gradient(&self, a: f64, b: f64) -> [f64; 2] {
        let p = [a, b];
        std::array::from_fn(|axis| {
            let h = FD_GRADIENT_STEP * self.rect.extent(axis);
            let at = |offset: f64| {
                let mut q = p;
                q[axis] += offset;
                self.profile.value(q[0], q[1])
            };
            let lo_ok = p[axis] - h >= self.rect.lo[axis];
            let hi_ok = p[axis] + h <= self.rect.hi[axis];
            match (lo_ok, hi_ok) {
                (true, true) => (at(h) - at(-h)) / (2.0 * h),
                (false, _) => (at(h) - at(0.0)) / h,
                (true, false) => (at(0.0) - at(-h)) / h,
            }
        })
    }
}

/// The twelve data functions of the initial-boundary value problem.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    domain: SpaceTimeBox,
    initial: [DataFunction; 4],
    x_inflow: [DataFunction; 4],
    y_inflow: [DataFunction; 4],
}

const INITIAL_LABELS: [&str; 4] = ["N1^0", "N2^0", "N3^0", "N4^0"];
const X_INFLOW_LABELS: [&str; 4] = ["N1^-", "N2^+", "N3^-", "N4^+"];
const Y_INFLOW_LABELS: [&str; 4] = ["N1^--", "N2^--", "N3^++", "N4^++"];

impl BoundaryData {
    /// Assembles data from per-species profiles. `x_inflow[k]` is a function of
    /// `(t, y)` on species `k+1`'s x-inflow face, `y_inflow[k]` a function of
    /// `(t, x)` on its y-inflow face.
    pub fn new(
        domain: SpaceTimeBox,
        initial: [Arc<dyn Profile>; 4],
        x_inflow: [Arc<dyn Profile>; 4],
        y_inflow: [Arc<dyn Profile>; 4],
    ) -> Self {
        let d = domain;
        let space = Rect::new([d.a1, d.a2], [d.b1, d.b2]);
        let x_face = Rect::new([0.0, d.a2], [d.t_end, d.b2]);
        let y_face = Rect::new([0.0, d.a1], [d.t_end, d.b1]);
        let mut initial = initial.into_iter();
        let mut x_inflow = x_inflow.into_iter();
        let mut y_inflow = y_inflow.into_iter();
        BoundaryData {
            domain,
            initial: std::array::from_fn(|k| {
                DataFunction::new(
                    INITIAL_LABELS[k],
                    initial.next().expect("4 profiles"),
                    space,
                )
            }),
            x_inflow: std::array::from_fn(|k| {
                DataFunction::new(
                    X_INFLOW_LABELS[k],
                    x_inflow.next().expect("4 profiles"),
                    x_face,
                )
            }),
            y_inflow: std::array::from_fn(|k| {
                DataFunction::new(
                    Y_INFLOW_LABELS[k],
                    y_inflow.next().expect("4 profiles"),
                    y_face,
                )
            }),
        }
    }

    pub fn domain(&self) -> &SpaceTimeBox {
        &self.domain
    }

    /// `N_i^0`, arguments `(x, y)`.
    pub fn initial(&self, slot: usize) -> &DataFunction {
        &self.initial[slot]
    }

    /// Data on species `slot+1`'s x-inflow face, arguments `(t, y)`.
    pub fn x_inflow(&self, slot: usize) -> &DataFunction {
        &self.x_inflow[slot]
    }

    /// Data on species `slot+1`'s y-inflow face, arguments `(t, x)`.
    pub fn y_inflow(&self, slot: usize) -> &DataFunction {
        &self.y_inflow[slot]
    }

    /// All twelve functions in the order initial, x-inflow, y-inflow.
    pub fn functions(&self) -> impl Iterator<Item = &DataFunction> {
        self.initial
            .iter()
            .chain(&self.x_inflow)
            .chain(&self.y_inflow)
    }

    /// Smallest value seen on a `resolution²` lattice of every rectangle,
    /// with the label of the function attaining it.
    pub fn min_sampled(&self, resolution: usize) -> (f64, &'static str) {
        let n = resolution.max(2);
        let mut best = (f64::INFINITY, "");
        for f in self.functions() {
            for k0 in 0..n {
                for k1 in 0..n {
                    let (a, b) = f.rect.lattice_point(k0, k1, n);
                    let v = f.value(a, b);
                    if !(v >= best.0) {
                        best = (v, f.label);
                    }
                }
            }
        }
        best
    }

    /// Fails when any function returns a negative or non-finite value on the
    /// sampling lattice.
    pub fn check_non_negative(&self, resolution: usize) -> Result<()> {
        let (min, label) = self.min_sampled(resolution);
        if min.is_nan() || min < 0.0 {
            return Err(data(format!("{label} takes the value {min}")));
        }
        Ok(())
    }
}

/// Residual of one compatibility identity along a shared edge.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeResidual {
    pub identity: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub residuals: Vec<EdgeResidual>,
    pub tol: f64,
    pub samples: usize,
    pub passed: bool,
}

impl CompatibilityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    /// One line per identity: `identity residual`.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for r in &self.residuals {
            let flag = if r.residual <= self.tol { "ok" } else { "FAIL" };
            s.push_str(&format!("{:<32} {:e} {}\n", r.identity, r.residual, flag));
        }
        s
    }
}

/// Evaluates the twelve edge identities (three per species): initial data
/// against each inflow function at `t = 0`, and the two inflow functions
/// against each other along the corner edge of their faces.
pub fn check_compatibility(
    bd: &BoundaryData,
    n_samples: usize,
    tol: f64,
) -> Result<CompatibilityReport> {
    if n_samples < 2 {
        return Err(usage(format!(
            "need at least 2 samples per edge, got {n_samples}"
        )));
    }
    if !(tol > 0.0) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    let d = &bd.domain;
    let side = |lo: f64, hi: f64, k: usize| {
        let f = k as f64 / (n_samples - 1) as f64;
        if k + 1 == n_samples {
            hi
        } else {
            lo * (1.0 - f) + hi * f
        }
    };
    let eval = |f: &DataFunction, a: f64, b: f64| -> Result<f64> {
        let v = f.value(a, b);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(data(format!("{} returned {v} at ({a}, {b})", f.label)))
        }
    };
    let sup = |lhs: &DataFunction,
               rhs: &DataFunction,
               lo: f64,
               hi: f64,
               args: &dyn Fn(f64) -> ((f64, f64), (f64, f64))|
     -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..n_samples {
            let s = side(lo, hi, k);
            let ((a0, b0), (a1, b1)) = args(s);
            worst = worst.max((eval(lhs, a0, b0)? - eval(rhs, a1, b1)?).abs());
        }
        Ok(worst)
    };

    let mut residuals = Vec::with_capacity(12);
    for (slot, (xf_side, yf_side)) in [("a1", "a2"), ("b1", "a2"), ("a1", "b2"), ("b1", "b2")]
        .into_iter()
        .enumerate()
    {
        let init = &bd.initial[slot];
        let xin = &bd.x_inflow[slot];
        let yin = &bd.y_inflow[slot];
        let xf = if xf_side == "a1" { d.a1 } else { d.b1 };
        let yf = if yf_side == "a2" { d.a2 } else { d.b2 };

        residuals.push(EdgeResidual {
            identity: format!("{}({xf_side},y) = {}(0,y)", init.label, xin.label),
            residual: sup(init, xin, d.a2, d.b2, &|y| ((xf, y), (0.0, y)))?,
        });
        residuals.push(EdgeResidual {
            identity: format!("{}(x,{yf_side}) = {}(0,x)", init.label, yin.label),
            residual: sup(init, yin, d.a1, d.b1, &|x| ((x, yf), (0.0, x)))?,
        });
        residuals.push(EdgeResidual {
            identity: format!("{}(t,{yf_side}) = {}(t,{xf_side})", xin.label, yin.label),
            residual: sup(xin, yin, 0.0, d.t_end, &|t| ((t, yf), (t, xf)))?,
        });
    }
    let passed = residuals.iter().all(|r| r.residual <= tol);
    Ok(CompatibilityReport {
        residuals,
        tol,
        samples: n_samples,
        passed,
    })
}

/// Every function of species `i` returns `levels[i]`.
pub fn constant_family(levels: [f64; 4], domain: SpaceTimeBox) -> Result<BoundaryData> {
    if let Some(bad) = levels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(usage(format!(
            "constant levels must be non-negative, got {bad}"
        )));
    }
    let profiles = levels.map(|v| Arc::new(Constant(v)) as Arc<dyn Profile>);
    Ok(BoundaryData::new(
        domain,
        profiles.clone(),
        profiles.clone(),
        profiles,
    ))
}

/// Data obtained by restricting four space-time functions to the initial
/// slice and each species' inflow faces. Compatible by construction.
pub fn restriction_family(
    fields: [Arc<dyn FieldProfile>; 4],
    params: &ModelParams,
    domain: SpaceTimeBox,
) -> BoundaryData {
    let species = params.all_species();
    let restrict = |slice: &dyn Fn(&Species) -> Slice| -> [Arc<dyn Profile>; 4] {
        std::array::from_fn(|k| {
            Arc::new(Restricted {
                field: fields[k].clone(),
                slice: slice(&species[k]),
            }) as Arc<dyn Profile>
        })
    };
    let initial = restrict(&|_| Slice::Initial);
    let x_inflow = restrict(&|s| Slice::XFace(s.x_face(&domain)));
    let y_inflow = restrict(&|s| Slice::YFace(s.y_face(&domain)));
    BoundaryData::new(domain, initial, x_inflow, y_inflow)
}

/// Data generated by free transport of `profiles[i]` along species `i+1`'s
/// velocity: `g_i(t,x,y) = φ_i(x − u_i t, y − v_i t)`. With `S = 0` the exact
/// solution is `g` itself.
pub fn transport_family(
    profiles: [Arc<dyn Profile>; 4],
    params: &ModelParams,
    domain: SpaceTimeBox,
) -> BoundaryData {
    let species = params.all_species();
    let mut profiles = profiles.into_iter();
    let fields: [Arc<dyn FieldProfile>; 4] = std::array::from_fn(|k| {
        Arc::new(Transported {
            profile: profiles.next().expect("4 profiles"),
            velocity: species[k].velocity,
        }) as Arc<dyn FieldProfile>
    });
    restriction_family(fields, params, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, FRAC_PI_4).unwrap()
    }

    fn zero() -> Arc<dyn Profile> {
        Arc::new(Constant(0.0))
    }

    #[test]
    fn constant_data_is_compatible() {
        let d = constant_family([0.003; 4], SpaceTimeBox::unit()).unwrap();
        let r = check_compatibility(&d, 65, DEFAULT_COMPAT_TOL).unwrap();
        assert!(r.passed);
        assert_eq!(r.residuals.len(), 12);
        assert_eq!(r.max_residual(), 0.0);

        let d = constant_family([0.2, 0.1, 0.4, 0.2], SpaceTimeBox::unit()).unwrap();
        assert!(check_compatibility(&d, 9, 1e-9).unwrap().passed);
        assert!(constant_family([0.1, -0.1, 0.0, 0.0], SpaceTimeBox::unit()).is_err());
    }

    #[test]
    fn constructed_violation_is_reported_on_the_first_identity() {
        let mut initial: [Arc<dyn Profile>; 4] = std::array::from_fn(|_| zero());
        initial[0] = Arc::new(Constant(1.0));
        let d = BoundaryData::new(
            SpaceTimeBox::unit(),
            initial,
            std::array::from_fn(|_| zero()),
            std::array::from_fn(|_| zero()),
        );
        let r = check_compatibility(&d, 17, 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.residuals[0].residual, 1.0);
        assert_eq!(r.residuals[0].identity, "N1^0(a1,y) = N1^-(0,y)");
        assert_eq!(r.residuals[2].residual, 0.0);
        assert!(r.table().contains("FAIL"));
    }

    #[test]
    fn non_finite_sampler_is_named() {
        let mut x_inflow: [Arc<dyn Profile>; 4] = std::array::from_fn(|_| zero());
        x_inflow[2] = Arc::new(FnProfile::new(|_, _| f64::NAN));
        let d = BoundaryData::new(
            SpaceTimeBox::unit(),
            std::array::from_fn(|_| zero()),
            x_inflow,
            std::array::from_fn(|_| zero()),
        );
        let err = check_compatibility(&d, 5, 1e-9).unwrap_err();
        assert!(err.to_string().contains("N3^-"), "{err}");
        assert!(check_compatibility(&d, 1, 1e-9).is_err());
    }

    #[test]
    fn transport_family_restriction_algebra() {
        let p = params();
        let phi: Arc<dyn Profile> =
            Arc::new(FnProfile::with_gradient(|a, b| a + b, |_, _| [1.0, 1.0]));
        let d = transport_family([phi, zero(), zero(), zero()], &p, SpaceTimeBox::unit());
        let (t, y) = (0.3, 0.6);
        let (cs, sn) = (p.cos_theta(), p.sin_theta());
        assert_abs_diff_eq!(d.initial(0).value(0.2, 0.7), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(
            d.x_inflow(0).value(t, y),
            0.0 - t * cs + y - t * sn,
            epsilon = 1e-15
        );
        let g = d.x_inflow(0).gradient(t, y);
        assert_abs_diff_eq!(g[0], -(cs + sn), epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        assert!(check_compatibility(&d, 257, 1e-12).unwrap().max_residual() <= 1e-12);
    }

    #[test]
    fn fd_gradient_fallback_and_refusal() {
        let f = DataFunction::new(
            "g",
            Arc::new(FnProfile::new(|a: f64, b: f64| a * a + 3.0 * b)),
            Rect::new([0.0, 0.0], [1.0, 2.0]),
        );
        assert!(!f.has_exact_gradient());
        let g = f.gradient(0.5, 1.0);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 3.0, epsilon = 1e-8);
        // one-sided at the rectangle edge
        let g = f.gradient(1.0, 2.0);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-5);
        assert!(f.try_gradient(0.5, 0.5, false).is_err());
        assert!(f.try_gradient(0.5, 0.5, true).is_ok());
    }

    #[test]
    fn built_in_families_are_non_negative() {
        use rand::{Rng, SeedableRng};
        let p = params();
        let bump: Arc<dyn Profile> = Arc::new(FnProfile::new(|a: f64, b: f64| {
            (-((a - 0.5).powi(2) + (b - 0.5).powi(2)) / 0.02).exp()
        }));
        let d = transport_family(
            std::array::from_fn(|_| bump.clone()),
            &p,
            SpaceTimeBox::unit(),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for f in d.functions() {
            let r = *f.rect();
            for _ in 0..10_000 / 12 + 1 {
                let a = rng.gen_range(r.lo[0]..=r.hi[0]);
                let b = rng.gen_range(r.lo[1]..=r.hi[1]);
                assert!(f.value(a, b) >= 0.0);
            }
        }
        assert!(d.check_non_negative(33).is_ok());
        assert!(check_compatibility(&d, 257, 1e-12).unwrap().passed);
    }
}
