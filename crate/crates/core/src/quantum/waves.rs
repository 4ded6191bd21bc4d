//! Relativistic matter waves and two-wave superposition.

use serde::{Deserialize, Serialize};

use super::twofloat::TwoFloat;
use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// `E = sqrt(p² c² + E0²)` [J].
pub fn relativistic_energy(p: f64, e0: f64) -> f64 {
    (p * SPEED_OF_LIGHT).hypot(e0)
}

/// `λ = h c / sqrt(K² + 2 K E0)` for kinetic energy `K` and rest energy `E0`.
pub fn de_broglie_wavelength(kinetic: f64, e0: f64) -> Result<f64> {
    if !(kinetic > 0.0) {
        return Err(Error::Domain(format!(
            "kinetic energy must be > 0 for a finite wavelength, got {kinetic:e}"
        )));
    }
    if e0 < 0.0 {
        return Err(Error::Domain(format!("rest energy must be >= 0, got {e0:e}")));
    }
    Ok(PLANCK * SPEED_OF_LIGHT / (kinetic * (kinetic + 2.0 * e0)).sqrt())
}

/// The same wavelength by the momentum route: `E = K + E0`,
/// `p = sqrt(E² − E0²) / c`, `λ = h / p`, carried in double-double precision
/// so the subtraction does not cancel.
pub fn de_broglie_via_momentum(kinetic: f64, e0: f64) -> Result<f64> {
    if !(kinetic > 0.0) || e0 < 0.0 {
        return Err(Error::Domain(format!(
            "need kinetic > 0 and rest energy >= 0, got {kinetic:e}, {e0:e}"
        )));
    }
    let total = TwoFloat::from(kinetic) + TwoFloat::from(e0);
    let rest = TwoFloat::from(e0);
    let pc = (total * total - rest * rest).sqrt();
    let p = pc / TwoFloat::from(SPEED_OF_LIGHT);
    Ok((TwoFloat::from(PLANCK) / p).hi())
}

/// Nonrelativistic `h / sqrt(2 m K)` with `m = E0 / c²`.
pub fn de_broglie_nonrelativistic(kinetic: f64, e0: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / (2.0 * e0 * kinetic).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    /// Angular frequency [rad/s].
    pub omega: f64,
    /// Wave number [rad/m].
    pub k: f64,
}

/// `y = B[cos(ω₁t − k₁x) + cos(ω₂t − k₂x)]` and its beat form
/// `2B cos(Δω t − Δk x) cos(ω̄ t − k̄ x)` with half-differences `Δ` and means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    /// Direct sum of the two waves.
    pub sum: f64,
    /// Product of envelope and carrier.
    pub product: f64,
    pub envelope_phase: f64,
    pub carrier_phase: f64,
    /// `2B cos(envelope_phase)`.
    pub envelope: f64,
    pub carrier: f64,
}

pub fn superpose_waves(w1: &Wave, w2: &Wave, x: f64, t: f64) -> Result<Superposition> {
    if w1.amplitude != w2.amplitude {
        return Err(Error::AmplitudeMismatch(w1.amplitude, w2.amplitude));
    }
    let b = w1.amplitude;
    let sum = b * ((w1.omega * t - w1.k * x).cos() + (w2.omega * t - w2.k * x).cos());
    let d_omega = 0.5 * (w1.omega - w2.omega);
    let d_k = 0.5 * (w1.k - w2.k);
    let m_omega = 0.5 * (w1.omega + w2.omega);
    let m_k = 0.5 * (w1.k + w2.k);
    let envelope_phase = d_omega * t - d_k * x;
    let carrier_phase = m_omega * t - m_k * x;
    let envelope = 2.0 * b * envelope_phase.cos();
    let carrier = carrier_phase.cos();
    Ok(Superposition {
        sum,
        product: envelope * carrier,
        envelope_phase,
        carrier_phase,
        envelope,
        carrier,
    })
}
