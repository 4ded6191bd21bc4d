use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("pore {index} spans {cells} cell(s) across; at least 3 are required")]
    Resolution { index: usize, cells: usize },

    #[error("liquid volume budget violated at step {step}: expected change {expected:e}, got {actual:e}")]
    Budget {
        step: u64,
        expected: f64,
        actual: f64,
    },

    #[error("pressure solve did not converge in {iterations} iterations (last relative residual {:e})", .residual_history.last().copied().unwrap_or(f64::NAN))]
    Convergence {
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("non-finite value in field `{field}` at ({i}, {j}) on step {step}")]
    NonFinite {
        field: &'static str,
        i: usize,
        j: usize,
        step: u64,
    },

    #[error("divergence {divergence:e} exceeds bound {bound:e} after projection on step {step}")]
    Divergence {
        step: u64,
        divergence: f64,
        bound: f64,
    },

    #[error("point ({x:e}, {y:e}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("superposition requires equal amplitudes, got {0} and {1}")]
    AmplitudeMismatch(f64, f64),

    #[error("negative radicand {0:e} in critical velocity")]
    NegativeRadicand(f64),

    #[error("chemical potential search failed after {0} bisection steps")]
    NoChemicalPotential(usize),

    #[error("malformed {kind} data: {message}")]
    Format { kind: &'static str, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}
