//! Liquid-fraction transport.
//!
//! Each step applies a conservative dimension-split upwind update (the split
//! carries the `γ_c ∇·u` correction, with `γ_c` frozen at the start of the
//! step, which keeps the update bounded for split CFL numbers up to 1/2),
//! then an interface-compression flux limited so that no cell leaves
//! `[0, 1]`, then the optional evaporation sink. The liquid volume change is
//! checked against the sum of its sources.

use super::topology::Topology;
use crate::error::{Error, Result};
use crate::field::{Field, SolverState};

/// Interface-compression coefficient.
pub const COMPRESSION: f64 = 1.0;
/// Relative tolerance of the per-step volume budget.
pub const BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VofReport {
    /// Liquid volume change predicted from the fluxes and sinks [m²].
    pub expected_change: f64,
    pub actual_change: f64,
    /// Volume removed by evaporation [m²].
    pub evaporated: f64,
    /// Total absolute correction applied by clamping to `[0, 1]` [m²].
    pub clamped: f64,
    /// Interface length used for the evaporation sink [m].
    pub interface_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaporation {
    /// Mass flux per unit interface area [kg/(m²·s)].
    pub rate: f64,
    pub rho_liquid: f64,
}

/// Advances `state.gamma` by one step of length `dt` using the face velocities in `state`.
pub fn advect_vof(
    state: &mut SolverState,
    dt: f64,
    topo: &Topology,
    evaporation: Option<Evaporation>,
) -> Result<VofReport> {
    let g = topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let area = g.cell_area();
    let before = state.gamma.clone();
    let reference_volume = {
        let v = before.sum() * area;
        if v > 0.0 {
            v
        } else {
            topo.fluid_cells() as f64 * area
        }
    };

    let sharp: Vec<f64> = before
        .data
        .iter()
        .map(|&x| if x > 0.5 { 1.0 } else { 0.0 })
        .collect();
    let mut dilatation = 0.0;
    let mut gamma = before.clone();
    let x_first = state.step % 2 == 0;
    for pass in 0..2 {
        if (pass == 0) == x_first {
            dilatation += sweep_x(&mut gamma, &state.u, &sharp, dt, topo);
        } else {
            dilatation += sweep_y(&mut gamma, &state.v, &sharp, dt, topo);
        }
    }
    compress(&mut gamma, &state.u, &state.v, dt, topo);

    let mut clamped = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if !topo.is_fluid(i, j) {
                continue;
            }
            let x = gamma.get(i, j);
            let c = x.clamp(0.0, 1.0);
            if c != x {
                clamped += (c - x).abs();
                gamma.set(i, j, c);
            }
        }
    }
    clamped *= area;
    if clamped > 0.0 {
        log::debug!("step {}: clamped {clamped:e} m² of liquid fraction", state.step);
    }

    let mut report = VofReport {
        clamped,
        ..VofReport::default()
    };
    if let Some(evap) = evaporation.filter(|e| e.rate > 0.0) {
        let length = interface_length(&gamma, topo);
        let target = evap.rate * length * dt / evap.rho_liquid;
        report.interface_length = length;
        report.evaporated = remove_liquid(&mut gamma, topo, target);
    }

    let mut actual = 0.0;
    for (a, b) in gamma.data.iter().zip(&before.data) {
        actual += a - b;
    }
    report.actual_change = actual * area;
    report.expected_change = dilatation * area - report.evaporated;
    let mismatch = (report.actual_change - report.expected_change).abs();
    if mismatch > BUDGET_TOL * reference_volume {
        return Err(Error::Budget {
            step: state.step,
            expected: report.expected_change,
            actual: report.actual_change,
        });
    }
    state.gamma = gamma;
    Ok(report)
}

#[inline]
fn upwind_flux(vel: f64, donor_lo: f64, donor_hi: f64) -> f64 {
    if vel > 0.0 {
        vel * donor_lo
    } else if vel < 0.0 {
        vel * donor_hi
    } else {
        0.0
    }
}

/// x-sweep; returns the `Σ γ_c (∂u/∂x) dt` dilatation contribution.
fn sweep_x(gamma: &mut Field, u: &Field, sharp: &[f64], dt: f64, topo: &Topology) -> f64 {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let c = dt / g.dx;
    let old = gamma.clone();
    let mut dil = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if !topo.is_fluid(i, j) {
                continue;
            }
            let face = |fi: usize| -> f64 {
                if !topo.u_open(fi, j) {
                    return 0.0;
                }
                let l = topo.wrap_i(fi as isize - 1).unwrap();
                let r = topo.wrap_i(fi as isize).unwrap();
                upwind_flux(u.get(fi, j), old.get(l, j), old.get(r, j))
            };
            let (uw, ue) = (u.get(i, j), u.get(i + 1, j));
            let flux = face(i + 1) - face(i);
            let k = j * nx + i;
            let div = c * (ue - uw);
            gamma.data[k] = old.data[k] - c * flux + sharp[k] * div;
            dil += sharp[k] * div;
        }
    }
    dil
}

fn sweep_y(gamma: &mut Field, v: &Field, sharp: &[f64], dt: f64, topo: &Topology) -> f64 {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let c = dt / g.dy;
    let old = gamma.clone();
    let mut dil = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if !topo.is_fluid(i, j) {
                continue;
            }
            let face = |fj: usize| -> f64 {
                if !topo.v_open(i, fj) {
                    return 0.0;
                }
                upwind_flux(v.get(i, fj), old.get(i, fj - 1), old.get(i, fj))
            };
            let (vs, vn) = (v.get(i, j), v.get(i, j + 1));
            let flux = face(j + 1) - face(j);
            let k = j * nx + i;
            let div = c * (vn - vs);
            gamma.data[k] = old.data[k] - c * flux + sharp[k] * div;
            dil += sharp[k] * div;
        }
    }
    dil
}

/// Cell-centred gradient with zero-gradient treatment at walls.
fn gradient(gamma: &Field, topo: &Topology, i: usize, j: usize) -> [f64; 2] {
    let g = &topo.grid;
    let c = gamma.get(i, j);
    let at = |di: isize, dj: isize| -> f64 {
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if topo.fluid_at(ni, nj) {
            gamma.get(topo.wrap_i(ni).unwrap(), nj as usize)
        } else {
            c
        }
    };
    [
        (at(1, 0) - at(-1, 0)) / (2.0 * g.dx),
        (at(0, 1) - at(0, -1)) / (2.0 * g.dy),
    ]
}

/// Interface length `Σ |∇γ| dA` over fluid cells [m].
pub fn interface_length(gamma: &Field, topo: &Topology) -> f64 {
    let g = &topo.grid;
    let mut total = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if topo.is_fluid(i, j) {
                let [gx, gy] = gradient(gamma, topo, i, j);
                total += (gx * gx + gy * gy).sqrt();
            }
        }
    }
    total * g.cell_area()
}

/// A limited antidiffusive transfer between two cells, in fraction units.
struct Transfer {
    from: usize,
    to: usize,
    amount: f64,
}

fn compress(gamma: &mut Field, u: &Field, v: &Field, dt: f64, topo: &Topology) {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut transfers = Vec::new();
    let grad: Vec<[f64; 2]> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if topo.is_fluid(i, j) {
                gradient(gamma, topo, i, j)
            } else {
                [0.0; 2]
            }
        })
        .collect();

    let mut push = |a: usize, b: usize, speed: f64, normal_grad: f64, tangential: f64, h: f64| {
        let gf = 0.5 * (gamma.data[a] + gamma.data[b]);
        let w = gf * (1.0 - gf);
        if w <= 0.0 || speed == 0.0 {
            return;
        }
        let norm = (normal_grad * normal_grad + tangential * tangential).sqrt();
        if norm == 0.0 {
            return;
        }
        // positive: liquid moves from a to b
        let q = COMPRESSION * speed.abs() * w * normal_grad / norm * dt / h;
        if q > 0.0 {
            transfers.push(Transfer { from: a, to: b, amount: q });
        } else if q < 0.0 {
            transfers.push(Transfer { from: b, to: a, amount: -q });
        }
    };
    for j in 0..ny {
        for i in 0..=nx {
            if !topo.u_open(i, j) || (g.periodic_x && i == nx) {
                continue;
            }
            let a = j * nx + topo.wrap_i(i as isize - 1).unwrap();
            let b = j * nx + topo.wrap_i(i as isize).unwrap();
            let gx = (gamma.data[b] - gamma.data[a]) / g.dx;
            let gy = 0.5 * (grad[a][1] + grad[b][1]);
            push(a, b, u.get(i, j), gx, gy, g.dx);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !topo.v_open(i, j) {
                continue;
            }
            let a = (j - 1) * nx + i;
            let b = j * nx + i;
            let gy = (gamma.data[b] - gamma.data[a]) / g.dy;
            let gx = 0.5 * (grad[a][0] + grad[b][0]);
            push(a, b, v.get(i, j), gy, gx, g.dy);
        }
    }
    if transfers.is_empty() {
        return;
    }

    let mut out = vec![0.0; nx * ny];
    let mut inflow = vec![0.0; nx * ny];
    for t in &transfers {
        out[t.from] += t.amount;
        inflow[t.to] += t.amount;
    }
    let limit_out: Vec<f64> = (0..nx * ny)
        .map(|k| if out[k] > 0.0 { (gamma.data[k] / out[k]).min(1.0) } else { 1.0 })
        .collect();
    let limit_in: Vec<f64> = (0..nx * ny)
        .map(|k| {
            if inflow[k] > 0.0 {
                ((1.0 - gamma.data[k]) / inflow[k]).min(1.0)
            } else {
                1.0
            }
        })
        .collect();
    for t in &transfers {
        let a = t.amount * limit_out[t.from].min(limit_in[t.to]).max(0.0);
        gamma.data[t.from] -= a;
        gamma.data[t.to] += a;
    }
}

/// Removes up to `target` m² of liquid, weighted by `|∇γ| γ`, never taking a
/// cell below zero. Returns the volume actually removed.
fn remove_liquid(gamma: &mut Field, topo: &Topology, target: f64) -> f64 {
    let g = &topo.grid;
    let area = g.cell_area();
    let (nx, ny) = (g.nx, g.ny);
    let mut weight = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if topo.is_fluid(i, j) {
                let [gx, gy] = gradient(gamma, topo, i, j);
                weight[j * nx + i] = (gx * gx + gy * gy).sqrt() * gamma.get(i, j);
            }
        }
    }
    let mut removed = 0.0;
    let mut remaining = target;
    // cells that would be emptied are drained and dropped from the next pass
    for _ in 0..16 {
        let total: f64 = weight.iter().sum();
        if remaining <= 0.0 || total <= 0.0 {
            break;
        }
        let mut saturated = false;
        let mut taken_now = 0.0;
        for k in 0..nx * ny {
            if weight[k] == 0.0 {
                continue;
            }
            let want = remaining * weight[k] / total / area;
            let take = if want >= gamma.data[k] {
                saturated = true;
                weight[k] = 0.0;
                gamma.data[k]
            } else {
                want
            };
            gamma.data[k] -= take;
            taken_now += take * area;
        }
        removed += taken_now;
        remaining = target - removed;
        if !saturated {
            break;
        }
    }
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellKind, CellMask, GridSpec};

    fn periodic_box(n: usize) -> Topology {
        let g = GridSpec::new(n, n, 1.0, 1.0).periodic();
        Topology::new(g, CellMask::uniform(n, n, CellKind::Liquid))
    }

    fn step_profile(topo: &Topology) -> SolverState {
        let g = topo.grid;
        let mut s = SolverState::at_rest(g);
        s.gamma = Field::from_fn(g.nx, g.ny, |i, _| if (16..48).contains(&i) { 1.0 } else { 0.0 });
        s
    }

    fn x_centroid(gamma: &Field, dx: f64) -> f64 {
        let (mut m, mut w) = (0.0, 0.0);
        for j in 0..gamma.ny {
            for i in 0..gamma.nx {
                m += gamma.get(i, j) * (i as f64 + 0.5) * dx;
                w += gamma.get(i, j);
            }
        }
        m / w
    }

    #[test]
    fn zero_velocity_leaves_gamma_untouched() {
        let topo = periodic_box(64);
        let mut s = step_profile(&topo);
        s.gamma.set(20, 5, 0.37);
        let before = s.gamma.clone();
        advect_vof(&mut s, 1e-3, &topo, None).unwrap();
        assert_eq!(s.gamma, before);
    }

    #[test]
    fn uniform_flow_translates_and_conserves() {
        let topo = periodic_box(64);
        let g = topo.grid;
        let mut s = step_profile(&topo);
        let c = 0.5;
        s.u = Field::filled(g.nx + 1, g.ny, c);
        let dt = 0.25 * g.dx / c;
        let v0 = s.liquid_volume();
        let x0 = x_centroid(&s.gamma, g.dx);
        let steps = 40;
        for n in 0..steps {
            s.step = n;
            advect_vof(&mut s, dt, &topo, None).unwrap();
        }
        let shift = x_centroid(&s.gamma, g.dx) - x0;
        let expected = c * dt * steps as f64;
        assert!((shift - expected).abs() < g.dx, "shift {shift} vs {expected}");
        assert!(((s.liquid_volume() - v0) / v0).abs() < 1e-12);
        assert!(s.gamma.data.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn evaporation_removes_the_budgeted_volume() {
        let topo = periodic_box(64);
        let mut s = step_profile(&topo);
        // smear the edges so the interface has finite length
        for j in 0..64 {
            s.gamma.set(15, j, 0.5);
            s.gamma.set(48, j, 0.5);
        }
        let length = interface_length(&s.gamma, &topo);
        let evap = Evaporation {
            rate: 1e-3,
            rho_liquid: 1e3,
        };
        let dt = 1e-2;
        let before = s.gamma.clone();
        let r = advect_vof(&mut s, dt, &topo, Some(evap)).unwrap();
        let expected = evap.rate * length * dt / evap.rho_liquid;
        // cell-wise differences; subtracting two totals would cancel
        let lost: f64 = before.data.iter().zip(&s.gamma.data).map(|(a, b)| a - b).sum::<f64>() * topo.grid.cell_area();
        assert!(((lost - expected) / expected).abs() < 1e-8, "{lost:e} vs {expected:e}");
        assert!((r.evaporated - expected).abs() <= 1e-12 * expected);
    }
}
