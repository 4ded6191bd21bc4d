//! Vorticity and vortex-core detection.

use serde::{Deserialize, Serialize};

use crate::field::{Field, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "CW")]
    Clockwise,
    #[serde(rename = "CCW")]
    CounterClockwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexCore {
    pub position: [f64; 2],
    pub cell: (usize, usize),
    pub peak_vorticity: f64,
    pub core_speed: f64,
    pub sense: Sense,
    /// Index of the counter-rotating partner, if paired.
    pub partner: Option<usize>,
}

/// Cell-centred velocity averaged from the faces.
fn cell_velocities(snap: &Snapshot) -> (Field, Field) {
    let s = &snap.state;
    let (nx, ny) = (s.grid.nx, s.grid.ny);
    (
        Field::from_fn(nx, ny, |i, j| 0.5 * (s.u.get(i, j) + s.u.get(i + 1, j))),
        Field::from_fn(nx, ny, |i, j| 0.5 * (s.v.get(i, j) + s.v.get(i, j + 1))),
    )
}

/// Derivative along one axis at a cell: centred where both neighbours are
/// fluid, one-sided where only one is, zero where neither is.
fn derivative(f: &Field, fluid: impl Fn(isize, isize) -> bool, i: usize, j: usize, di: isize, dj: isize, h: f64) -> f64 {
    let (ii, jj) = (i as isize, j as isize);
    let fwd = fluid(ii + di, jj + dj);
    let back = fluid(ii - di, jj - dj);
    let at = |s: isize| f.get((ii + s * di) as usize, (jj + s * dj) as usize);
    match (back, fwd) {
        (true, true) => (at(1) - at(-1)) / (2.0 * h),
        (false, true) => (at(1) - at(0)) / h,
        (true, false) => (at(0) - at(-1)) / h,
        (false, false) => 0.0,
    }
}

/// `ω = ∂v/∂x − ∂u/∂y` at cell centres; zero inside solids.
pub fn vorticity_field(snap: &Snapshot) -> Field {
    let g = *snap.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (uc, vc) = cell_velocities(snap);
    let fluid = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && !snap.mask.is_solid(i as usize, j as usize)
    };
    Field::from_fn(nx, ny, |i, j| {
        if snap.mask.is_solid(i, j) {
            return 0.0;
        }
        derivative(&vc, fluid, i, j, 1, 0, g.dx) - derivative(&uc, fluid, i, j, 0, 1, g.dy)
    })
}

/// Vortex cores: interior fluid cells whose `|ω|` exceeds
/// `threshold_factor · rms(ω)` and is a maximum over the 3×3 neighbourhood,
/// and whose speed is a minimum over the same neighbourhood.
///
/// Opposite-sense cores that are each other's nearest opposite-sense core and
/// lie within `pair_distance` are linked as pairs.
pub fn detect_vortices(snap: &Snapshot, threshold_factor: f64, pair_distance: f64) -> Vec<VortexCore> {
    let g = *snap.grid();
    let (nx, ny) = (g.nx, g.ny);
    let omega = vorticity_field(snap);
    let (uc, vc) = cell_velocities(snap);
    let speed = Field::from_fn(nx, ny, |i, j| uc.get(i, j).hypot(vc.get(i, j)));

    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            if !snap.mask.is_solid(i, j) {
                sum_sq += omega.get(i, j).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Vec::new();
    }
    let threshold = threshold_factor * (sum_sq / count as f64).sqrt();
    if !(threshold > 0.0) {
        return Vec::new();
    }

    let mut cores = Vec::new();
    for j in 1..ny.saturating_sub(1) {
        'cell: for i in 1..nx.saturating_sub(1) {
            let w = omega.get(i, j).abs();
            if w <= threshold {
                continue;
            }
            let s = speed.get(i, j);
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let (ni, nj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if snap.mask.is_solid(ni, nj) {
                        continue 'cell;
                    }
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    // plateaus resolve to the first cell in scan order
                    let earlier = (dj, di) < (0, 0);
                    let wn = omega.get(ni, nj).abs();
                    if wn > w || (earlier && wn == w) || speed.get(ni, nj) < s {
                        continue 'cell;
                    }
                }
            }
            let (x, y) = g.cell_center(i, j);
            let peak = omega.get(i, j);
            cores.push(VortexCore {
                position: [x, y],
                cell: (i, j),
                peak_vorticity: peak,
                core_speed: s,
                sense: if peak > 0.0 { Sense::CounterClockwise } else { Sense::Clockwise },
                partner: None,
            });
        }
    }

    let dist = |a: &VortexCore, b: &VortexCore| (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]);
    let nearest: Vec<Option<usize>> = cores
        .iter()
        .map(|a| {
            cores
                .iter()
                .enumerate()
                .filter(|(_, b)| b.sense != a.sense && dist(a, b) <= pair_distance)
                .min_by(|(_, b), (_, c)| dist(a, b).total_cmp(&dist(a, c)))
                .map(|(k, _)| k)
        })
        .collect();
    for k in 0..cores.len() {
        if let Some(m) = nearest[k] {
            if nearest[m] == Some(k) {
                cores[k].partner = Some(m);
            }
        }
    }
    cores
}

/// Number of linked counter-rotating pairs.
pub fn pair_count(cores: &[VortexCore]) -> usize {
    cores
        .iter()
        .enumerate()
        .filter(|(k, c)| c.partner.is_some_and(|m| m > *k))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    fn lamb_oseen(x: f64, y: f64, xc: f64, yc: f64, circulation: f64, rc: f64) -> [f64; 2] {
        let (dx, dy) = (x - xc, y - yc);
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            return [0.0, 0.0];
        }
        let ut = circulation / (2.0 * std::f64::consts::PI * r2) * (1.0 - (-r2 / (rc * rc)).exp());
        [-ut * dy, ut * dx]
    }

    /// A cell centre near the middle of a unit box resolved by 64 cells.
    const C: f64 = 32.5 / 64.0;

    #[test]
    fn uniform_field_has_no_vorticity_and_no_cores() {
        let g = GridSpec::new(16, 16, 1.0, 1.0);
        let snap = Snapshot::from_velocity_fn(g, |_, _| [1.0, 2.0]);
        assert_eq!(vorticity_field(&snap).max_abs(), 0.0);
        assert!(detect_vortices(&snap, 1.0, 1.0).is_empty());
        let zero = Snapshot::from_velocity_fn(g, |_, _| [0.0, 0.0]);
        assert!(detect_vortices(&zero, 1.0, 1.0).is_empty());
    }

    #[test]
    fn analytic_curls() {
        let g = GridSpec::new(20, 12, 2.0, 1.2);
        let w0 = 0.7;
        let rot = Snapshot::from_velocity_fn(g, |x, y| [-w0 * (y - 0.6), w0 * (x - 1.0)]);
        assert!(vorticity_field(&rot).data.iter().all(|w| (w - 2.0 * w0).abs() < 1e-10));
        let shear = Snapshot::from_velocity_fn(g, |_, y| [y, 0.0]);
        assert!(vorticity_field(&shear).data.iter().all(|w| (w + 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_vortex_is_found_at_the_centre() {
        let g = GridSpec::new(64, 64, 1.0, 1.0);
        let snap = Snapshot::from_velocity_fn(g, |x, y| lamb_oseen(x, y, C, C, 1.0, 0.08));
        let cores = detect_vortices(&snap, 1.0, 0.5);
        assert_eq!(cores.len(), 1, "{cores:?}");
        let c = &cores[0];
        assert!((c.position[0] - C).abs() <= g.dx && (c.position[1] - C).abs() <= g.dy);
        assert_eq!(c.sense, Sense::CounterClockwise);
        assert_eq!(c.partner, None);
    }

    /// Solid-body core tapering to rest at radius `r_max`, so two of them
    /// do not advect each other.
    fn compact(x: f64, y: f64, xc: f64, yc: f64, omega: f64, r_max: f64) -> [f64; 2] {
        let (dx, dy) = (x - xc, y - yc);
        let r2 = dx * dx + dy * dy;
        if r2 >= r_max * r_max {
            return [0.0, 0.0];
        }
        let taper = (1.0 - r2 / (r_max * r_max)).powi(2);
        [-0.5 * omega * taper * dy, 0.5 * omega * taper * dx]
    }

    #[test]
    fn counter_rotating_pair_is_linked() {
        let g = GridSpec::new(96, 64, 1.5, 1.0);
        let snap = Snapshot::from_velocity_fn(g, |x, y| {
            let a = compact(x, y, C, C, 1.0, 0.2);
            let b = compact(x, y, C + 0.5, C, -1.0, 0.2);
            [a[0] + b[0], a[1] + b[1]]
        });
        let cores = detect_vortices(&snap, 1.0, 0.75);
        assert_eq!(cores.len(), 2, "{cores:?}");
        assert_ne!(cores[0].sense, cores[1].sense);
        assert_eq!(cores[0].partner, Some(1));
        assert_eq!(cores[1].partner, Some(0));
        assert_eq!(pair_count(&cores), 1);
        assert!(detect_vortices(&snap, 1.0, 0.4).iter().all(|c| c.partner.is_none()));
    }

    #[test]
    fn cellular_flow_has_one_pair() {
        // two counter-rotating cells side by side; centres fall on cell centres
        let g = GridSpec::new(66, 33, 2.0, 1.0);
        let pi = std::f64::consts::PI;
        let snap = Snapshot::from_velocity_fn(g, |x, y| {
            // ψ = sin(πx) sin(πy); u = ∂ψ/∂y, v = −∂ψ/∂x
            [pi * (pi * x).sin() * (pi * y).cos(), -pi * (pi * x).cos() * (pi * y).sin()]
        });
        let cores = detect_vortices(&snap, 1.0, 1.5);
        assert_eq!(cores.len(), 2, "{cores:?}");
        assert_eq!(pair_count(&cores), 1);
    }
}
