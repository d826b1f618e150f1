use thiserror::Error;

/// Errors raised by the sampler library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's contract (wrong dimension, wrong target kind, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A parameter lies outside the interval where an operation is defined.
    #[error("{what} = {value} is outside the admissible interval {interval}")]
    Domain {
        what: &'static str,
        value: f64,
        interval: String,
    },

    /// The splitting family collapses to Störmer-Verlet at b = 0 and b = 1/2.
    #[error("b = {0} reduces the splitting family to Störmer-Verlet; use the Störmer-Verlet coefficients instead")]
    DegenerateFamily(f64),

    /// Potential or gradient evaluation failed (overflow, non-finite value).
    #[error(transparent)]
    Evaluation(#[from] EvalError),

    #[error("invalid configuration at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Failure to evaluate a target's potential or gradient.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("non-finite {quantity} (coordinate {index:?})")]
    NonFinite {
        quantity: &'static str,
        index: Option<usize>,
    },

    #[error("latent field overflow: max latent value {max_latent} exceeds {limit}")]
    Overflow { max_latent: f64, limit: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
