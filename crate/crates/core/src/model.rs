//! Physical constants, the four planar velocities and the collision terms.
//!
//! Species `i` moves with speed `c` at angle `θ + (i-1)·π/2` in the order
//! 1, 2, 3, 4 = θ, θ+π/2, θ−π/2, θ+π. Species 1 and 4 gain from the `(2,3)`
//! pair and lose to the `(1,4)` pair; species 2 and 3 the reverse.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Wave speed `c`, collision cross-section `S` and the velocity angle `θ`.
///
/// `θ` must lie strictly inside `(0, π/2)`: every region formula divides by
/// both `cos θ` and `sin θ`. `S = 0` is accepted and switches collisions off
/// (free streaming).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    c: f64,
    s: f64,
    theta: f64,
    cos: f64,
    sin: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    c: f64,
    s: f64,
    theta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = crate::Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.c, raw.s, raw.theta)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            c: p.c,
            s: p.s,
            theta: p.theta,
        }
    }
}

impl ModelParams {
    pub fn new(c: f64, s: f64, theta: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(usage(format!("wave speed c must be positive, got {c}")));
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(usage(format!(
                "cross-section S must be non-negative, got {s}"
            )));
        }
        if !(theta.is_finite() && theta > 0.0 && theta < FRAC_PI_2) {
            return Err(usage(format!(
                "theta must lie strictly inside (0, pi/2), got {theta}"
            )));
        }
        Ok(ModelParams {
            c,
            s,
            theta,
            cos: theta.cos(),
            sin: theta.sin(),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cos_theta(&self) -> f64 {
        self.cos
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin
    }

    /// `2cS`, the collision rate prefactor and the positivity threshold for σ.
    pub fn collision_rate(&self) -> f64 {
        2.0 * self.c * self.s
    }

    /// Same parameters with collisions switched off.
    pub fn collisionless(&self) -> Self {
        ModelParams { s: 0.0, ..*self }
    }

    pub fn species(&self, index: usize) -> Result<Species> {
        Species::new(index, self)
    }

    pub fn all_species(&self) -> [Species; 4] {
        [1, 2, 3, 4].map(|i| Species::new(i, self).expect("index in 1..=4"))
    }
}

/// Space-time box `[0, T] × [a1, b1] × [a2, b2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct SpaceTimeBox {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub t_end: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    t_end: f64,
}

impl TryFrom<RawBox> for SpaceTimeBox {
    type Error = crate::Error;
    fn try_from(r: RawBox) -> Result<Self> {
        SpaceTimeBox::new(r.t_end, r.a1, r.b1, r.a2, r.b2)
    }
}

impl From<SpaceTimeBox> for RawBox {
    fn from(b: SpaceTimeBox) -> Self {
        RawBox {
            a1: b.a1,
            b1: b.b1,
            a2: b.a2,
            b2: b.b2,
            t_end: b.t_end,
        }
    }
}

impl SpaceTimeBox {
    pub fn new(t_end: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<Self> {
        let all_finite = [t_end, a1, b1, a2, b2].iter().all(|v| v.is_finite());
        if !all_finite || !(t_end > 0.0) || !(a1 < b1) || !(a2 < b2) {
            return Err(usage(format!(
                "invalid space-time box: T={t_end}, [{a1}, {b1}] x [{a2}, {b2}]"
            )));
        }
        Ok(SpaceTimeBox {
            a1,
            b1,
            a2,
            b2,
            t_end,
        })
    }

    /// `[0, 1] × [0, 1]²`.
    pub fn unit() -> Self {
        SpaceTimeBox {
            a1: 0.0,
            b1: 1.0,
            a2: 0.0,
            b2: 1.0,
            t_end: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.b1 - self.a1
    }

    pub fn height(&self) -> f64 {
        self.b2 - self.a2
    }

    /// Largest of the three edge lengths; scales geometric tolerances.
    pub fn scale(&self) -> f64 {
        self.t_end.max(self.width()).max(self.height())
    }

    /// Membership with absolute tolerance `tol` on every face.
    pub fn contains(&self, t: f64, x: f64, y: f64, tol: f64) -> bool {
        t >= -tol
            && t <= self.t_end + tol
            && x >= self.a1 - tol
            && x <= self.b1 + tol
            && y >= self.a2 - tol
            && y <= self.b2 + tol
    }
}

/// Which end of a spatial interval a species enters through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

impl Side {
    pub fn pick(self, low: f64, high: f64) -> f64 {
        match self {
            Side::Low => low,
            Side::High => high,
        }
    }
}

/// One of the four particle populations with its velocity and collision sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    /// 1-based index as in the kinetic system.
    pub index: usize,
    pub velocity: [f64; 2],
    /// `+1` for species 1 and 4, `-1` for species 2 and 3.
    pub collision_sign: f64,
    /// Face `x = a1` (Low) or `x = b1` (High) through which characteristics enter.
    pub x_inflow: Side,
    /// Face `y = a2` (Low) or `y = b2` (High) through which characteristics enter.
    pub y_inflow: Side,
}

impl Species {
    pub fn new(index: usize, params: &ModelParams) -> Result<Self> {
        let (c, cs, sn) = (params.c, params.cos, params.sin);
        let (velocity, collision_sign) = match index {
            1 => ([c * cs, c * sn], 1.0),
            2 => ([-c * sn, c * cs], -1.0),
            3 => ([c * sn, -c * cs], -1.0),
            4 => ([-c * cs, -c * sn], 1.0),
            _ => return Err(usage(format!("species index must be 1..=4, got {index}"))),
        };
        let side = |v: f64| if v > 0.0 { Side::Low } else { Side::High };
        Ok(Species {
            index,
            velocity,
            collision_sign,
            x_inflow: side(velocity[0]),
            y_inflow: side(velocity[1]),
        })
    }

    /// Zero-based slot in `[_; 4]` arrays.
    pub fn slot(&self) -> usize {
        self.index - 1
    }

    /// x-coordinate of the species' x-inflow face.
    pub fn x_face(&self, domain: &SpaceTimeBox) -> f64 {
        self.x_inflow.pick(domain.a1, domain.b1)
    }

    /// y-coordinate of the species' y-inflow face.
    pub fn y_face(&self, domain: &SpaceTimeBox) -> f64 {
        self.y_inflow.pick(domain.a2, domain.b2)
    }
}

/// Velocity of species `index` (1-based).
pub fn velocity_of(index: usize, params: &ModelParams) -> Result<[f64; 2]> {
    Ok(Species::new(index, params)?.velocity)
}

/// `Q = 2cS (n2 n3 − n1 n4)`.
#[inline]
pub fn collision(n: &[f64; 4], params: &ModelParams) -> f64 {
    params.collision_rate() * (n[1] * n[2] - n[0] * n[3])
}

/// `ρ = n1 + n2 + n3 + n4`.
#[inline]
pub fn density(n: &[f64; 4]) -> f64 {
    n[0] + n[1] + n[2] + n[3]
}

/// `Q_i^σ(n) = σ ρ(n) n_i + sign_i Q(n)`.
///
/// For `n ≥ 0` and `σ ≥ 2cS` the value is non-negative: the `−2cS n_i n_j`
/// loss term is dominated by `σ n_i n_j` inside `σ ρ n_i`.
#[inline]
pub fn regularized_collision(
    species: &Species,
    n: &[f64; 4],
    sigma: f64,
    params: &ModelParams,
) -> f64 {
    sigma * density(n) * n[species.slot()] + species.collision_sign * collision(n, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

    fn unit_params() -> ModelParams {
        ModelParams::new(1.0, 1.0, FRAC_PI_4).unwrap()
    }

    #[test]
    fn collision_examples() {
        let p = unit_params();
        assert_eq!(collision(&[0.0; 4], &p), 0.0);
        assert_eq!(collision(&[1.0; 4], &p), 0.0);
        assert_eq!(collision(&[0.0, 1.0, 1.0, 0.0], &p), 2.0);
        assert_abs_diff_eq!(collision(&[0.2, 0.1, 0.4, 0.2], &p), 0.0, epsilon = 1e-17);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&[0.0; 4]), 0.0);
        assert_eq!(density(&[1.0; 4]), 4.0);
        assert_abs_diff_eq!(density(&[0.2, 0.1, 0.4, 0.2]), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn regularized_collision_examples() {
        let p = unit_params();
        let s1 = p.species(1).unwrap();
        let s2 = p.species(2).unwrap();
        assert_eq!(regularized_collision(&s1, &[0.0; 4], 5.0, &p), 0.0);
        assert_eq!(regularized_collision(&s1, &[1.0; 4], 2.0, &p), 8.0);
        assert_eq!(
            regularized_collision(&s2, &[0.0, 1.0, 1.0, 0.0], 2.0, &p),
            2.0
        );
    }

    #[test]
    fn velocity_examples() {
        let p = ModelParams::new(2.0, 1.0, FRAC_PI_6).unwrap();
        let v = velocity_of(2, &p).unwrap();
        assert_abs_diff_eq!(v[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], 3f64.sqrt(), epsilon = 1e-14);

        let v4 = velocity_of(4, &unit_params()).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(v4[0], -h, epsilon = 1e-15);
        assert_abs_diff_eq!(v4[1], -h, epsilon = 1e-15);

        assert!(velocity_of(0, &p).is_err());
        assert!(velocity_of(5, &p).is_err());
    }

    #[test]
    fn theta_outside_open_quarter_turn_is_rejected() {
        assert!(ModelParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, PI / 2.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.3).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.3).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.3).is_ok());
    }

    #[test]
    fn inflow_faces_follow_velocity_signs() {
        let sp = unit_params().all_species();
        assert_eq!((sp[0].x_inflow, sp[0].y_inflow), (Side::Low, Side::Low));
        assert_eq!((sp[1].x_inflow, sp[1].y_inflow), (Side::High, Side::Low));
        assert_eq!((sp[2].x_inflow, sp[2].y_inflow), (Side::Low, Side::High));
        assert_eq!((sp[3].x_inflow, sp[3].y_inflow), (Side::High, Side::High));
    }

    #[test]
    fn box_validation() {
        assert!(SpaceTimeBox::new(1.0, 0.0, 1.0, 0.0, 1.0).is_ok());
        assert!(SpaceTimeBox::new(0.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(SpaceTimeBox::new(1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(SpaceTimeBox::new(1.0, 0.0, 1.0, 2.0, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state() -> impl Strategy<Value = [f64; 4]> {
            prop::array::uniform4(-10.0f64..10.0)
        }

        proptest! {
            #[test]
            fn source_terms_sum_to_zero(n in state(), c in 0.1f64..10.0, s in 0.0f64..5.0, th in 0.01f64..1.56) {
                let p = ModelParams::new(c, s, th).unwrap();
                let q = collision(&n, &p);
                let total: f64 = p.all_species().iter().map(|sp| sp.collision_sign * q).sum();
                prop_assert_eq!(total, 0.0);
            }

            #[test]
            fn maxwellian_states_are_collision_free(a in 0.0f64..5.0, b in 0.01f64..5.0, d in 0.0f64..5.0) {
                // n2 n3 = b·da = a·db = n1 n4
                let n = [a, b, d * a, d * b];
                let p = ModelParams::new(1.0, 1.0, 0.5).unwrap();
                let q = collision(&n, &p);
                prop_assert!(q.abs() <= 1e-12 * (1.0 + n.iter().map(|v| v * v).sum::<f64>()));
            }

            #[test]
            fn regularized_source_is_non_negative_at_threshold(
                n in prop::array::uniform4(0.0f64..10.0), c in 0.1f64..10.0, s in 0.0f64..5.0, th in 0.01f64..1.56,
            ) {
                let p = ModelParams::new(c, s, th).unwrap();
                let sigma = p.collision_rate();
                for sp in p.all_species() {
                    let v = regularized_collision(&sp, &n, sigma, &p);
                    let scale = sigma * density(&n) * density(&n);
                    prop_assert!(v >= -1e-12 * scale.max(1.0), "species {} gave {}", sp.index, v);
                }
            }

            #[test]
            fn velocities_are_balanced(c in 0.1f64..10.0, th in 0.01f64..1.56) {
                let p = ModelParams::new(c, 1.0, th).unwrap();
                let sp = p.all_species();
                let sx: f64 = sp.iter().map(|s| s.velocity[0]).sum();
                let sy: f64 = sp.iter().map(|s| s.velocity[1]).sum();
                prop_assert!(sx.abs() < 1e-12 * c && sy.abs() < 1e-12 * c);
                for s in sp {
                    prop_assert!((s.velocity[0].hypot(s.velocity[1]) - c).abs() < 1e-12 * c);
                }
            }
        }
    }
}
