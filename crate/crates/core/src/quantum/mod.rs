//! Standalone calculators: matter waves, beats, dispersion, box modes with
//! Bose–Einstein filling, and truncated ladder operators.

pub mod dispersion;
pub mod fock;
pub mod modes;
pub mod twofloat;
pub mod waves;

pub use dispersion::{group_velocity_from_k, group_velocity_from_lambda};
pub use fock::{ladder_operators, FockSpace, Surd, SurdMatrix};
pub use modes::{
    be_occupation, build_mode_grid, condensate_fraction, occupation_reduced, occupations, solve_chemical_potential,
    ChemicalPotential, Mode, ModeGrid2D,
};
pub use twofloat::TwoFloat;
pub use waves::{
    de_broglie_nonrelativistic, de_broglie_via_momentum, de_broglie_wavelength, relativistic_energy, superpose_waves,
    Superposition, Wave,
};
