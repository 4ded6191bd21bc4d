//! Two-phase incompressible flow on a staggered grid.
//!
//! One step runs: time-step selection, liquid-fraction transport, momentum
//! advection, forces and diffusion, pressure projection.

pub mod init;
pub mod linalg;
pub mod momentum;
pub mod poisson;
pub mod project;
pub mod run;
pub mod timestep;
pub mod topology;
pub mod vof;

use serde::{Deserialize, Serialize};

use crate::config::{FluidProps, RunConfig, SimulationConfig};
use crate::error::Result;
use crate::field::{Field, Snapshot, SolverState};
use crate::geometry::{build_mask, CellMask};

pub use momentum::{Forcing, Velocity};
pub use project::{ProjectionReport, Projector};
pub use run::{resume_simulation, run_simulation, RunOutcome, RunOutputs, StopReason};
pub use timestep::{compute_dt, DtLimits};
pub use topology::{FaceKind, Topology};
pub use vof::{advect_vof, interface_length, Evaporation, VofReport};

/// Per-step diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub max_divergence: f64,
    /// The required bound `1e-8 · max_speed / dx` at this step.
    pub divergence_bound: f64,
    pub liquid_volume: f64,
    pub max_speed: f64,
    pub projection_iterations: usize,
    pub reynolds_estimate: f64,
    /// Liquid volume moved by clamping the fraction into `[0, 1]`.
    pub clamp_amount: f64,
    pub evaporated: f64,
    /// Largest per-step change of velocity (relative to the speed scale) and
    /// of the liquid fraction.
    pub relative_change: f64,
}

impl StepDiagnostics {
    pub fn divergence_ok(&self) -> bool {
        self.max_divergence <= self.divergence_bound
    }
}

/// A running simulation: geometry, parameters and the evolving state.
#[derive(Debug)]
pub struct Simulation {
    topo: Topology,
    props: FluidProps,
    run: RunConfig,
    forcing: Forcing,
    projector: Projector,
    /// Length scale for the Reynolds estimate.
    char_length: f64,
    state: SolverState,
}

impl Simulation {
    /// Builds the mask and initial state of a configuration.
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        let domain = cfg.domain_spec();
        let grid = cfg.grid_spec();
        let mask = build_mask(&domain, &cfg.pores, &grid)?;
        let topo = Topology::new(grid, mask.clone());
        let state = init::initial_state(cfg, &topo, &mask);
        let mut forcing = Forcing::none(&topo);
        forcing.body = cfg.run.body_force;
        forcing.gravity = cfg.run.gravity;
        forcing.pump_v = init::pore_pump(cfg.run.pressure_offset, &domain, &topo);
        let char_length = cfg
            .pores
            .iter()
            .map(|p| p.diameter)
            .fold(f64::INFINITY, f64::min)
            .min(domain.liquid_height());
        let mut sim = Self::from_parts(topo, cfg.fluids.clone(), cfg.run.clone(), state);
        sim.forcing = forcing;
        sim.char_length = char_length;
        Ok(sim)
    }

    /// A simulation over an arbitrary mask and state, forced by the body
    /// force and gravity of `run`.
    pub fn from_parts(topo: Topology, props: FluidProps, run: RunConfig, state: SolverState) -> Self {
        let mut forcing = Forcing::none(&topo);
        forcing.body = run.body_force;
        forcing.gravity = run.gravity;
        let projector = Projector::new(&topo, run.projection_tol, run.projection_max_iter);
        let char_length = topo.grid.ny as f64 * topo.grid.dy;
        Self {
            topo,
            props,
            run,
            forcing,
            projector,
            char_length,
            state,
        }
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn mask(&self) -> &CellMask {
        &self.topo.mask
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn props(&self) -> &FluidProps {
        &self.props
    }

    pub fn run_config(&self) -> &RunConfig {
        &self.run
    }

    pub fn forcing_mut(&mut self) -> &mut Forcing {
        &mut self.forcing
    }

    /// Replaces the state, e.g. when resuming from a checkpoint.
    pub fn set_state(&mut self, state: SolverState) {
        self.state = state;
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::new(self.state.clone(), self.topo.mask.clone())
    }

    fn limits(&self) -> DtLimits {
        DtLimits {
            dt_max: self.run.dt_max,
            viscous: self.run.viscous_scheme,
        }
    }

    /// Advances one time step.
    ///
    /// On error the state is left as it was before the step.
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        let topo = &self.topo;
        let old = &self.state;
        let mut dt = compute_dt(old, &self.props, &topo.grid, self.limits());
        if let Some(end) = self.run.end_time {
            dt = dt.min(end - old.t);
        }

        let mut next = old.clone();
        let evaporation = (self.props.evaporation_rate > 0.0).then_some(Evaporation {
            rate: self.props.evaporation_rate,
            rho_liquid: self.props.rho_liquid,
        });
        let vof = advect_vof(&mut next, dt, topo, evaporation)?;

        let advected = momentum::advect_momentum(&Velocity::of(old), dt, topo);
        let mut vel = momentum::apply_forces_and_diffusion(
            &advected,
            &next,
            dt,
            &self.props,
            topo,
            &self.forcing,
            self.run.viscous_scheme,
        )?;
        let proj = self
            .projector
            .project(&mut vel, &mut next.p, &next.gamma, &self.props, dt, topo, old.step)?;
        next.u = vel.u;
        next.v = vel.v;
        next.t = old.t + dt;
        next.step = old.step + 1;
        next.check_finite()?;

        let max_speed = next.max_speed();
        let relative_change = relative_change(old, &next);
        let diag = StepDiagnostics {
            step: next.step,
            t: next.t,
            dt,
            max_divergence: proj.max_divergence,
            divergence_bound: proj.divergence_bound,
            liquid_volume: next.liquid_volume(),
            max_speed,
            projection_iterations: proj.iterations,
            reynolds_estimate: self.props.rho_liquid * max_speed * self.char_length / self.props.eta_liquid,
            clamp_amount: vof.clamped,
            evaporated: vof.evaporated,
            relative_change,
        };
        self.state = next;
        Ok(diag)
    }
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `max(|Δu|, |Δv|) / max_speed` combined with `max |Δγ|`.
fn relative_change(old: &SolverState, new: &SolverState) -> f64 {
    let dv = max_diff(&old.u, &new.u).max(max_diff(&old.v, &new.v));
    let scale = new.max_speed();
    let vel = if dv == 0.0 { 0.0 } else { dv / scale };
    vel.max(max_diff(&old.gamma, &new.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ViscousScheme;
    use crate::geometry::{CellKind, GridSpec};

    #[test]
    fn rest_state_is_a_fixed_point() {
        let g = GridSpec::new(16, 16, 1.6e-7, 1.6e-7);
        let topo = Topology::new(g, CellMask::uniform(16, 16, CellKind::Liquid));
        let mut state = SolverState::at_rest(g);
        state.gamma = Field::filled(16, 16, 1.0);
        let mut sim = Simulation::from_parts(topo, FluidProps::single_phase(1e3, 1e-3), RunConfig::default(), state.clone());
        let d = sim.step().unwrap();
        let s = sim.state();
        assert_eq!(s.u, state.u);
        assert_eq!(s.v, state.v);
        assert_eq!(s.p, state.p);
        assert_eq!(s.gamma, state.gamma);
        assert_eq!(s.step, 1);
        assert!(s.t > 0.0);
        assert_eq!(d.relative_change, 0.0);
    }

    #[test]
    fn poiseuille_channel_reaches_the_parabola() {
        let (nx, ny) = (4, 32);
        let h = 0.32e-6;
        let g = GridSpec::new(nx, ny, h * nx as f64 / ny as f64, h).periodic();
        let topo = Topology::new(g, CellMask::uniform(nx, ny, CellKind::Liquid));
        let eta = 1e-3;
        let force = 1e6;
        let mut run = RunConfig {
            viscous_scheme: ViscousScheme::Implicit,
            body_force: [force, 0.0],
            ..RunConfig::default()
        };
        run.dt_max = Some(1e-7);
        let mut state = SolverState::at_rest(g);
        state.gamma = Field::filled(nx, ny, 1.0);
        let mut sim = Simulation::from_parts(topo, FluidProps::single_phase(1e3, eta), run, state);
        for _ in 0..200 {
            let d = sim.step().unwrap();
            assert!(d.divergence_ok());
            if d.relative_change < 1e-12 {
                break;
            }
        }
        let s = sim.state();
        let peak = force * h * h / (8.0 * eta);
        let mut worst: f64 = 0.0;
        for j in 0..ny {
            let y = (j as f64 + 0.5) * g.dy;
            let exact = force * (h - y) * y / (2.0 * eta);
            worst = worst.max((s.u.get(1, j) - exact).abs() / peak);
        }
        assert!(worst < 2e-2, "{worst}");
    }
}
