//! Backward characteristics of the free-transport part.
//!
//! Following species `i` backwards from `(t, x, y)` along `-(1, u, v)` the
//! path leaves the box through the initial slice (region A), the species'
//! x-inflow face (region B) or its y-inflow face (region C), whichever comes
//! first. Ties on the separating planes go to A, then B.

use serde::Serialize;

use crate::data::BoundaryData;
use crate::error::{usage, Error, Result};
use crate::fields::DOMAIN_TOL;
use crate::model::{SpaceTimeBox, Species};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// Exit through `t = 0`.
    A,
    /// Exit through the species' x-inflow face.
    B,
    /// Exit through the species' y-inflow face.
    C,
}

/// Backward characteristic through one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    pub region: Region,
    /// Backward travel time to the exit point, `0 ≤ s_max ≤ t`.
    pub s_max: f64,
    /// The evaluation point `(t, x, y)`, clamped into the box.
    pub origin: [f64; 3],
    pub velocity: [f64; 2],
}

/// Exit point of a characteristic and the data value found there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFoot {
    pub region: Region,
    pub s_max: f64,
    /// Space-time exit point `(t, x, y)`.
    pub point: [f64; 3],
    /// Arguments of the data function: `(x, y)` in A, `(t, y)` in B, `(t, x)` in C.
    pub args: [f64; 2],
    pub trace: f64,
}

/// Absolute geometric tolerance for a box.
pub fn geometry_tol(domain: &SpaceTimeBox) -> f64 {
    DOMAIN_TOL * domain.scale()
}

fn checked_point(t: f64, x: f64, y: f64, domain: &SpaceTimeBox) -> Result<[f64; 3]> {
    if !domain.contains(t, x, y, geometry_tol(domain)) {
        return Err(Error::Domain { t, x, y });
    }
    Ok([
        t.clamp(0.0, domain.t_end),
        x.clamp(domain.a1, domain.b1),
        y.clamp(domain.a2, domain.b2),
    ])
}

/// Backward times to reach the x- and y-inflow planes.
fn plane_times(species: &Species, x: f64, y: f64, domain: &SpaceTimeBox) -> (f64, f64) {
    let [u, v] = species.velocity;
    let sb = ((x - species.x_face(domain)) / u).max(0.0);
    let sc = ((y - species.y_face(domain)) / v).max(0.0);
    (sb, sc)
}

fn region_of(t: f64, sb: f64, sc: f64, eps: f64) -> Region {
    if t <= sb.min(sc) + eps {
        Region::A
    } else if sb <= sc + eps {
        Region::B
    } else {
        Region::C
    }
}

/// Exit region of the backward characteristic of `species` through `(t, x, y)`.
pub fn classify(
    species: &Species,
    t: f64,
    x: f64,
    y: f64,
    domain: &SpaceTimeBox,
) -> Result<Region> {
    let [t, x, y] = checked_point(t, x, y, domain)?;
    let (sb, sc) = plane_times(species, x, y, domain);
    Ok(region_of(t, sb, sc, geometry_tol(domain)))
}

/// Classifies and measures the backward characteristic through `(t, x, y)`.
pub fn characteristic(
    species: &Species,
    t: f64,
    x: f64,
    y: f64,
    domain: &SpaceTimeBox,
) -> Result<Characteristic> {
    let origin = checked_point(t, x, y, domain)?;
    let [t, x, y] = origin;
    let (sb, sc) = plane_times(species, x, y, domain);
    let region = region_of(t, sb, sc, geometry_tol(domain));
    let s_max = match region {
        Region::A => t,
        Region::B => sb,
        Region::C => sc,
    };
    if s_max > t + DOMAIN_TOL {
        return Err(Error::Internal(format!(
            "species {} at ({t}, {x}, {y}): travel time {s_max} exceeds t in region {region:?}",
            species.index
        )));
    }
    Ok(Characteristic {
        region,
        s_max: s_max.min(t),
        origin,
        velocity: species.velocity,
    })
}

impl Characteristic {
    /// Point at parameter `s ∈ [0, s_max]`: the exit point at `s = 0`, the
    /// evaluation point at `s = s_max`. Not range-checked.
    #[inline]
    pub fn at(&self, s: f64) -> [f64; 3] {
        let back = self.s_max - s;
        let [t, x, y] = self.origin;
        let [u, v] = self.velocity;
        [t - back, x - back * u, y - back * v]
    }

    /// Like [`at`](Self::at) with a range check on `s`.
    pub fn path_point(&self, s: f64) -> Result<[f64; 3]> {
        let tol = DOMAIN_TOL * self.s_max.max(1.0);
        if !(s >= -tol && s <= self.s_max + tol) {
            return Err(usage(format!(
                "path parameter {s} outside [0, {}]",
                self.s_max
            )));
        }
        Ok(self.at(s.clamp(0.0, self.s_max)))
    }

    /// Exit point snapped onto its face or slice and clamped into the box.
    pub fn exit_point(&self, domain: &SpaceTimeBox, species: &Species) -> [f64; 3] {
        let [t, x, y] = self.at(0.0);
        let t = t.clamp(0.0, domain.t_end);
        let x = x.clamp(domain.a1, domain.b1);
        let y = y.clamp(domain.a2, domain.b2);
        match self.region {
            Region::A => [0.0, x, y],
            Region::B => [t, species.x_face(domain), y],
            Region::C => [t, x, species.y_face(domain)],
        }
    }

    /// Arguments of the data function at the exit point.
    pub fn trace_args(&self, domain: &SpaceTimeBox, species: &Species) -> [f64; 2] {
        let [t, x, y] = self.exit_point(domain, species);
        match self.region {
            Region::A => [x, y],
            Region::B => [t, y],
            Region::C => [t, x],
        }
    }

    /// Data value at the exit point.
    pub fn trace(&self, data: &BoundaryData, species: &Species) -> f64 {
        let [a, b] = self.trace_args(data.domain(), species);
        let slot = species.slot();
        match self.region {
            Region::A => data.initial(slot).value(a, b),
            Region::B => data.x_inflow(slot).value(a, b),
            Region::C => data.y_inflow(slot).value(a, b),
        }
    }

    /// Gradient of the data function at the exit point, in its own arguments.
    pub fn trace_gradient(
        &self,
        data: &BoundaryData,
        species: &Species,
        allow_fallback: bool,
    ) -> Result<[f64; 2]> {
        let [a, b] = self.trace_args(data.domain(), species);
        let slot = species.slot();
        match self.region {
            Region::A => data.initial(slot).try_gradient(a, b, allow_fallback),
            Region::B => data.x_inflow(slot).try_gradient(a, b, allow_fallback),
            Region::C => data.y_inflow(slot).try_gradient(a, b, allow_fallback),
        }
    }
}

/// Exit region, travel time, exit point and data trace.
pub fn foot(species: &Species, t: f64, x: f64, y: f64, data: &BoundaryData) -> Result<CharFoot> {
    let domain = data.domain();
    let ch = characteristic(species, t, x, y, domain)?;
    Ok(CharFoot {
        region: ch.region,
        s_max: ch.s_max,
        point: ch.exit_point(domain, species),
        args: ch.trace_args(domain, species),
        trace: ch.trace(data, species),
    })
}

/// Point on the backward characteristic at parameter `s ∈ [0, s_max]`.
pub fn path_point(
    species: &Species,
    t: f64,
    x: f64,
    y: f64,
    s: f64,
    domain: &SpaceTimeBox,
) -> Result<[f64; 3]> {
    characteristic(species, t, x, y, domain)?.path_point(s)
}
