//! Initial fields and the pore-throat pump.

use super::topology::Topology;
use crate::config::SimulationConfig;
use crate::field::{Field, SolverState};
use crate::geometry::{wall_rows, CellKind, CellMask, DomainSpec, GridSpec, PoreSpec};

/// Sub-cell samples per direction used for the initial liquid fraction.
const SUBSAMPLES: usize = 8;

/// Height of the liquid surface above the reservoir floor at `x`.
///
/// Flat at `wall_y`, with a parabolic cap of apex `bulge · d` inside each pore.
pub fn meniscus_height(domain: &DomainSpec, pores: &[PoreSpec], bulge: f64, x: f64) -> f64 {
    for p in pores {
        let s = 2.0 * (x - p.sigma) / p.diameter;
        if s.abs() < 1.0 {
            return domain.wall_y + bulge * p.diameter * (1.0 - s * s);
        }
    }
    domain.wall_y
}

/// Liquid fraction per cell: the area fraction of each non-solid cell lying
/// below the meniscus.
pub fn initial_gamma(
    domain: &DomainSpec,
    pores: &[PoreSpec],
    bulge: f64,
    grid: &GridSpec,
    mask: &CellMask,
) -> Field {
    let n = SUBSAMPLES;
    Field::from_fn(grid.nx, grid.ny, |i, j| {
        if mask.is_solid(i, j) {
            return 0.0;
        }
        let mut inside = 0usize;
        for a in 0..n {
            let x = (i as f64 + (a as f64 + 0.5) / n as f64) * grid.dx;
            let top = meniscus_height(domain, pores, bulge, x);
            for b in 0..n {
                let y = (j as f64 + (b as f64 + 0.5) / n as f64) * grid.dy;
                if y < top {
                    inside += 1;
                }
            }
        }
        inside as f64 / (n * n) as f64
    })
}

/// A single divergence-free vortex filling the liquid reservoir, built as the
/// discrete curl of a node streamfunction so that it is exactly solenoidal.
///
/// `amplitude` is the peak speed [m/s]. The streamfunction is zero on every
/// node that touches a non-liquid cell.
pub fn swirl_velocity(amplitude: f64, domain: &DomainSpec, topo: &Topology, mask: &CellMask) -> (Field, Field) {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (w, h) = (domain.width, domain.wall_y);
    let liquid = |i: isize, j: isize| -> bool {
        if j < 0 || j >= ny as isize {
            return false;
        }
        match topo.wrap_i(i) {
            Some(i) => mask.get(i, j as usize) == CellKind::Liquid,
            None => false,
        }
    };
    let psi = Field::from_fn(nx + 1, ny + 1, |ci, cj| {
        let (i, j) = (ci as isize, cj as isize);
        let interior = liquid(i - 1, j - 1) && liquid(i, j - 1) && liquid(i - 1, j) && liquid(i, j);
        if !interior {
            return 0.0;
        }
        let (x, y) = (ci as f64 * g.dx, cj as f64 * g.dy);
        let (sx, sy) = ((std::f64::consts::PI * x / w).sin(), (std::f64::consts::PI * y / h).sin());
        amplitude * h / std::f64::consts::PI * sx * sy
    });
    let mut u = Field::from_fn(nx + 1, ny, |i, j| (psi.get(i, j + 1) - psi.get(i, j)) / g.dy);
    let v = Field::from_fn(nx, ny + 1, |i, j| -(psi.get(i + 1, j) - psi.get(i, j)) / g.dx);
    if g.periodic_x {
        for j in 0..ny {
            let seam = u.get(0, j);
            u.set(nx, j, seam);
        }
    }
    (u, v)
}

/// Force density on the v-faces of every pore throat, `nx × (ny+1)`.
///
/// Integrated over the throat height each pore column receives
/// `pressure_offset`; positive values push liquid towards the gas side.
pub fn pore_pump(pressure_offset: f64, domain: &DomainSpec, topo: &Topology) -> Vec<f64> {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut pump = vec![0.0; nx * (ny + 1)];
    if pressure_offset == 0.0 {
        return pump;
    }
    let rows = wall_rows(domain, g);
    let in_wall = |j: usize| rows.contains(&j);
    for i in 0..nx {
        let faces: Vec<usize> = (1..ny)
            .filter(|&j| topo.v_open(i, j) && (in_wall(j - 1) || in_wall(j)))
            .collect();
        if faces.is_empty() {
            continue;
        }
        let f = pressure_offset / (faces.len() as f64 * g.dy);
        for j in faces {
            pump[j * nx + i] = f;
        }
    }
    pump
}

/// The initial solver state for a configuration.
pub fn initial_state(cfg: &SimulationConfig, topo: &Topology, mask: &CellMask) -> SolverState {
    let domain = cfg.domain_spec();
    let mut state = SolverState::at_rest(topo.grid);
    state.gamma = initial_gamma(&domain, &cfg.pores, cfg.run.meniscus_bulge, &topo.grid, mask);
    if cfg.run.initial_swirl != 0.0 {
        let amplitude = cfg.run.initial_swirl * cfg.fluids.v_ref;
        let (u, v) = swirl_velocity(amplitude, &domain, topo, mask);
        state.u = u;
        state.v = v;
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mask;
    use crate::solver::momentum::Velocity;
    use crate::solver::project::max_divergence;

    fn setup(pores: Vec<PoreSpec>) -> (SimulationConfig, Topology, CellMask) {
        let mut cfg = SimulationConfig::default();
        cfg.grid.nx = 120;
        cfg.grid.ny = 62;
        cfg.pores = pores;
        let d = cfg.domain_spec();
        let g = cfg.grid_spec();
        let mask = build_mask(&d, &cfg.pores, &g).unwrap();
        (cfg.clone(), Topology::new(g, mask.clone()), mask)
    }

    #[test]
    fn flat_meniscus_fills_the_reservoir_exactly() {
        let (mut cfg, topo, mask) = setup(vec![]);
        cfg.run.meniscus_bulge = 0.0;
        let s = initial_state(&cfg, &topo, &mask);
        let g = topo.grid;
        let liquid = mask.count(CellKind::Liquid) as f64 * g.cell_area();
        assert!((s.liquid_volume() - liquid).abs() <= 1e-12 * liquid);
    }

    #[test]
    fn bulge_adds_the_parabolic_cap_area() {
        let d = 300e-9;
        let (mut cfg, topo, mask) = setup(vec![PoreSpec::new(3e-6, d)]);
        cfg.run.meniscus_bulge = 0.2;
        let flat = {
            let mut c = cfg.clone();
            c.run.meniscus_bulge = 0.0;
            initial_state(&c, &topo, &mask).liquid_volume()
        };
        let bulged = initial_state(&cfg, &topo, &mask).liquid_volume();
        let cap = 2.0 / 3.0 * d * 0.2 * d;
        assert!(((bulged - flat) - cap).abs() < 0.05 * cap, "{} vs {cap}", bulged - flat);
    }

    #[test]
    fn swirl_is_discretely_solenoidal_and_stays_in_the_liquid() {
        let (mut cfg, topo, mask) = setup(vec![PoreSpec::new(2e-6, 200e-9), PoreSpec::new(4e-6, 200e-9)]);
        cfg.run.initial_swirl = 1.0;
        let s = initial_state(&cfg, &topo, &mask);
        let vel = Velocity::of(&s);
        assert!(vel.max_speed() > 0.5 * cfg.fluids.v_ref);
        assert!(max_divergence(&vel, &topo) <= 1e-6 * vel.max_speed() / topo.grid.dx);
        let wall_row = wall_rows(&cfg.domain_spec(), &topo.grid)[0];
        for i in 0..topo.nx() {
            assert_eq!(s.v.get(i, wall_row), 0.0);
        }
    }

    #[test]
    fn pump_integrates_to_the_offset_per_column() {
        let (cfg, topo, _) = setup(vec![PoreSpec::new(3e-6, 300e-9)]);
        let pump = pore_pump(10.0, &cfg.domain_spec(), &topo);
        let g = topo.grid;
        let col: Vec<usize> = (0..g.nx).filter(|&i| pump.iter().skip(i).step_by(g.nx).any(|&f| f != 0.0)).collect();
        assert!(!col.is_empty());
        for i in col {
            let total: f64 = (0..=g.ny).map(|j| pump[j * g.nx + i] * g.dy).sum();
            assert!((total - 10.0).abs() < 1e-9);
        }
    }
}
