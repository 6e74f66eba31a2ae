//! Independent checks on the characteristic solver: a first-order upwind
//! finite-difference scheme, the exact collisionless solution written out
//! species by species, and field comparison metrics.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::BoundaryData;
use crate::error::{usage, Result};
use crate::fields::{Field4, GridSpec};
use crate::model::{collision, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpwindConfig {
    /// Output grid; time steps are subdivided to satisfy the CFL bound.
    pub grid: GridSpec,
    /// Courant number in `(0, 1]`, applied as `Δt (|u|/Δx + |v|/Δy) ≤ cfl`.
    pub cfl: f64,
    /// Largest number of sub-steps per output time step.
    pub max_substeps: usize,
}

impl UpwindConfig {
    pub fn new(grid: GridSpec) -> Self {
        UpwindConfig {
            grid,
            cfl: 0.9,
            max_substeps: 100_000,
        }
    }

    /// Sub-steps per output step needed to respect the CFL bound.
    pub fn substeps(&self, params: &ModelParams) -> Result<usize> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(usage(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        let g = &self.grid;
        let rate = params
            .all_species()
            .iter()
            .map(|s| s.velocity[0].abs() / g.dx() + s.velocity[1].abs() / g.dy())
            .fold(0.0, f64::max);
        let m = ((g.dt() * rate / self.cfl) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        if m > self.max_substeps {
            return Err(usage(format!(
                "CFL needs {m} sub-steps per output step, more than the cap {}",
                self.max_substeps
            )));
        }
        Ok(m)
    }
}

/// Explicit first-order upwind integration of the kinetic system. Each
/// species uses one-sided differences against its velocity components;
/// inflow nodes take the data, every other node (outflow faces included)
/// takes the upwind update, which only reads upstream neighbours.
pub fn upwind_solve(
    data: &BoundaryData,
    params: &ModelParams,
    cfg: &UpwindConfig,
) -> Result<Field4> {
    let g = cfg.grid;
    if g.domain != *data.domain() {
        return Err(usage(
            "upwind grid and boundary data live on different boxes",
        ));
    }
    let m = cfg.substeps(params)?;
    let (nx, ny) = (g.nx, g.ny);
    let plane = nx * ny;
    let species = params.all_species();
    let xs: Vec<f64> = (0..nx).map(|i| g.x(i)).collect();
    let ys: Vec<f64> = (0..ny).map(|j| g.y(j)).collect();

    let mut state: [Vec<f64>; 4] = std::array::from_fn(|slot| {
        (0..plane)
            .map(|k| data.initial(slot).value(xs[k / ny], ys[k % ny]))
            .collect()
    });
    let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(g.len()));
    for slot in 0..4 {
        out[slot].extend_from_slice(&state[slot]);
    }

    let (dx, dy) = (g.dx(), g.dy());
    for n in 0..g.nt - 1 {
        let (t0, t1) = (g.t(n), g.t(n + 1));
        let h = (t1 - t0) / m as f64;
        for sub in 1..=m {
            let t_new = if sub == m { t1 } else { t0 + sub as f64 * h };
            let old = &state;
            let next: Vec<Vec<f64>> = species
                .par_iter()
                .map(|s| {
                    let slot = s.slot();
                    let [u, v] = s.velocity;
                    let i_in = if u > 0.0 { 0 } else { nx - 1 };
                    let j_in = if v > 0.0 { 0 } else { ny - 1 };
                    let f = &old[slot];
                    (0..plane)
                        .map(|k| {
                            let (i, j) = (k / ny, k % ny);
                            if i == i_in {
                                return data.x_inflow(slot).value(t_new, ys[j]);
                            }
                            if j == j_in {
                                return data.y_inflow(slot).value(t_new, xs[i]);
                            }
                            let ddx = if u > 0.0 {
                                (f[k] - f[k - ny]) / dx
                            } else {
                                (f[k + ny] - f[k]) / dx
                            };
                            let ddy = if v > 0.0 {
                                (f[k] - f[k - 1]) / dy
                            } else {
                                (f[k + 1] - f[k]) / dy
                            };
                            let node = [old[0][k], old[1][k], old[2][k], old[3][k]];
                            f[k] - h * (u * ddx + v * ddy)
                                + h * s.collision_sign * collision(&node, params)
                        })
                        .collect()
                })
                .collect();
            for (slot, lattice) in next.into_iter().enumerate() {
                state[slot] = lattice;
            }
        }
        for slot in 0..4 {
            out[slot].extend_from_slice(&state[slot]);
        }
    }
    Field4::from_lattices(g, out)
}

/// Collisionless solution: each species' data carried along its
/// characteristic, with the exit region and data arguments written out
/// explicitly per species.
pub fn free_streaming_exact(
    data: &BoundaryData,
    params: &ModelParams,
    grid: &GridSpec,
) -> Result<Field4> {
    if grid.domain != *data.domain() {
        return Err(usage("grid and boundary data live on different boxes"));
    }
    Ok(Field4::from_fn(*grid, |t, x, y| {
        std::array::from_fn(|slot| exact_trace(slot + 1, t, x, y, params, data))
    }))
}

fn exact_trace(i: usize, t: f64, x: f64, y: f64, p: &ModelParams, data: &BoundaryData) -> f64 {
    let (c, cs, sn) = (p.c(), p.cos_theta(), p.sin_theta());
    let (tan, cot) = (sn / cs, cs / sn);
    let d = data.domain();
    let (a1, b1, a2, b2) = (d.a1, d.b1, d.a2, d.b2);
    let k = i - 1;
    let init = data.initial(k);
    let xin = data.x_inflow(k);
    let yin = data.y_inflow(k);
    match i {
        1 => {
            if x - c * t * cs >= a1 && y - c * t * sn >= a2 {
                init.value(x - c * t * cs, y - c * t * sn)
            } else if x * sn - y * cs <= a1 * sn - a2 * cs {
                xin.value(t - (x - a1) / (c * cs), y - tan * (x - a1))
            } else {
                yin.value(t - (y - a2) / (c * sn), x - cot * (y - a2))
            }
        }
        2 => {
            if x + c * t * sn <= b1 && y - c * t * cs >= a2 {
                init.value(x + c * t * sn, y - c * t * cs)
            } else if x * cs + y * sn >= b1 * cs + a2 * sn {
                xin.value(t - (b1 - x) / (c * sn), y - cot * (b1 - x))
            } else {
                yin.value(t - (y - a2) / (c * cs), x + tan * (y - a2))
            }
        }
        3 => {
            if x - c * t * sn >= a1 && y + c * t * cs <= b2 {
                init.value(x - c * t * sn, y + c * t * cs)
            } else if x * cs + y * sn <= a1 * cs + b2 * sn {
                xin.value(t - (x - a1) / (c * sn), y + cot * (x - a1))
            } else {
                yin.value(t - (b2 - y) / (c * cs), x - tan * (b2 - y))
            }
        }
        _ => {
            if x + c * t * cs <= b1 && y + c * t * sn <= b2 {
                init.value(x + c * t * cs, y + c * t * sn)
            } else if x * sn - y * cs >= b1 * sn - b2 * cs {
                xin.value(t - (b1 - x) / (c * cs), y + tan * (b1 - x))
            } else {
                yin.value(t - (b2 - y) / (c * sn), x + cot * (b2 - y))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeciesDifference {
    pub sup: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub sup_difference: f64,
    pub rms_difference: f64,
    pub per_species: [SpeciesDifference; 4],
    pub grid_a: String,
    pub grid_b: String,
}

fn grid_label(g: &GridSpec) -> String {
    format!("{}x{}x{}", g.nt, g.nx, g.ny)
}

/// Difference metrics on `a`'s grid. When the grids differ `b` is sampled
/// trilinearly at `a`'s nodes; both must cover the same box.
pub fn compare(a: &Field4, b: &Field4) -> Result<ComparisonReport> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.domain != gb.domain {
        return Err(usage("cannot compare fields on different boxes"));
    }
    let per_species: [SpeciesDifference; 4] = std::array::from_fn(|slot| {
        let la = a.lattice(slot);
        let (sup, sq) = (0..ga.len())
            .into_par_iter()
            .map(|idx| {
                let vb = if ga == gb {
                    b.lattice(slot)[idx]
                } else {
                    let [t, x, y] = ga.point(idx);
                    b.sample_all_clamped(t, x, y)[slot]
                };
                let e = (la[idx] - vb).abs();
                (e, e * e)
            })
            .reduce(|| (0.0, 0.0), |p, q| (p.0.max(q.0), p.1 + q.1));
        SpeciesDifference {
            sup,
            rms: (sq / ga.len() as f64).sqrt(),
        }
    });
    Ok(ComparisonReport {
        sup_difference: per_species.iter().map(|d| d.sup).fold(0.0, f64::max),
        rms_difference: (per_species.iter().map(|d| d.rms * d.rms).sum::<f64>() / 4.0).sqrt(),
        per_species,
        grid_a: grid_label(ga),
        grid_b: grid_label(gb),
    })
}

/// Largest defect of the discrete mass balance
/// `d/dt ∬ρ + Σ_i ∮ n_i (v_i · ν) = 0` between consecutive time levels,
/// using trapezoid quadrature in space and time.
pub fn mass_budget_defect(f: &Field4, params: &ModelParams) -> f64 {
    let g = f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let wx = |i: usize| {
        if i == 0 || i + 1 == nx {
            0.5 * g.dx()
        } else {
            g.dx()
        }
    };
    let wy = |j: usize| {
        if j == 0 || j + 1 == ny {
            0.5 * g.dy()
        } else {
            g.dy()
        }
    };
    let species = params.all_species();
    let mass = |n: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let idx = g.index(n, i, j);
                acc += wx(i) * wy(j) * (0..4).map(|s| f.lattice(s)[idx]).sum::<f64>();
            }
        }
        acc
    };
    let outflux = |n: usize| -> f64 {
        let mut acc = 0.0;
        for s in &species {
            let l = f.lattice(s.slot());
            let [u, v] = s.velocity;
            for j in 0..ny {
                acc += u * wy(j) * (l[g.index(n, nx - 1, j)] - l[g.index(n, 0, j)]);
            }
            for i in 0..nx {
                acc += v * wx(i) * (l[g.index(n, i, ny - 1)] - l[g.index(n, i, 0)]);
            }
        }
        acc
    };
    (0..g.nt - 1)
        .map(|n| ((mass(n + 1) - mass(n)) / g.dt() + 0.5 * (outflux(n) + outflux(n + 1))).abs())
        .fold(0.0, f64::max)
}
