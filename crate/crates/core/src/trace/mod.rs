//! Flow measurement: interpolation, streamlines, probe lines, vortices, and
//! the critical-velocity estimate.

pub mod estimator;
pub mod interpolate;
pub mod sampling;
pub mod streamline;
pub mod vortex;

pub use estimator::{estimate_critical_velocity, histogram_mode, Bin, CriticalEstimate};
pub use interpolate::{interpolate_velocity, AnalyticField, VelocityField};
pub use sampling::{sample_field, sample_lines, Orientation, Probe, SampleLine, SampleTable};
pub use streamline::{seed_equidistant, trace_streamline, Streamline, Termination};
pub use vortex::{detect_vortices, pair_count, vorticity_field, Sense, VortexCore};
