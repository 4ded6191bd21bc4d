//! Two-phase nanopore flow simulation and the analysis built on it.
//!
//! The crate is organised by task:
//!
//! * [`config`] and [`geometry`] describe a run and classify the grid cells;
//! * [`solver`] advances velocity, pressure and liquid fraction on a MAC grid;
//! * [`trace`] samples finished fields: probe lines, streamlines, vortices and
//!   the critical-velocity estimate;
//! * [`landau`] evaluates the critical-velocity and condensate-momentum
//!   criteria and bridges simulated speeds into them;
//! * [`quantum`] holds the standalone matter-wave and Bose statistics calculators;
//! * [`io`] and [`pipeline`] read and write files and chain the stages together.

pub mod config;
pub mod constants;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod landau;
pub mod pipeline;
pub mod quantum;
pub mod solver;
pub mod trace;

pub use config::{parse_config, parse_config_str, validate_config, FluidProps, SimulationConfig};
pub use error::{Error, Result};
pub use field::{Field, Snapshot, SolverState};
pub use geometry::{build_mask, CellKind, CellMask, DomainSpec, GridSpec, PoreSpec};
