use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),

    #[error("non-finite state at step {step}, index {index}, path {path}: {value}")]
    NonFinite {
        step: usize,
        index: usize,
        path: usize,
        value: f64,
    },

    #[error("insufficient effective sample size {n_effective:.1} (need at least {required}); increase the number of paths or reduce the tilt")]
    InsufficientEffectiveSample { n_effective: f64, required: f64 },

    #[error("oracle undefined: {0}")]
    OracleUndefined(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
