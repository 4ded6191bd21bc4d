use std::f64::consts::PI;

use crate::config::{FluidProps, ViscousScheme};
use crate::field::SolverState;
use crate::geometry::GridSpec;

/// Safety factor applied to the smallest stability limit.
pub const SAFETY: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DtLimits {
    pub dt_max: Option<f64>,
    /// With implicit diffusion the viscous limit does not apply.
    pub viscous: ViscousScheme,
}

/// Stable time step for the explicit parts of the scheme.
///
/// `dt = SAFETY · min(h / max_speed, 0.25 h² ρ_min / η_max, capillary)`,
/// capped by `dt_max`. A field at rest drops the advective limit.
pub fn compute_dt(state: &SolverState, props: &FluidProps, grid: &GridSpec, limits: DtLimits) -> f64 {
    let h = grid.h_min();
    let mut dt = f64::INFINITY;

    let speed = state.max_speed();
    if speed > 0.0 {
        dt = dt.min(h / speed);
    }
    if limits.viscous == ViscousScheme::Explicit {
        let rho_min = props.rho_liquid.min(props.rho_gas);
        let eta_max = props.eta_liquid.max(props.eta_gas);
        dt = dt.min(0.25 * h * h * rho_min / eta_max);
    }
    if props.surface_tension > 0.0 {
        let rho_sum = props.rho_liquid + props.rho_gas;
        dt = dt.min((rho_sum * h.powi(3) / (4.0 * PI * props.surface_tension)).sqrt());
    }

    let mut dt = SAFETY * dt;
    if let Some(cap) = limits.dt_max {
        dt = dt.min(cap);
    }
    dt
}
