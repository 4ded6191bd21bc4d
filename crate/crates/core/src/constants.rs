//! Exact SI defining constants.

use std::f64::consts::PI;

/// Planck constant [J·s].
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant `h / 2π` [J·s].
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, i.e. joules per electronvolt.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// The constants as one value, for reports and for passing around.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    pub h: f64,
    pub hbar: f64,
    pub c: f64,
    pub k_b: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    h: PLANCK,
    hbar: HBAR,
    c: SPEED_OF_LIGHT,
    k_b: BOLTZMANN,
};
