use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("singular kernel matrix: min eigenvalue {min_eig:e} below {threshold:e}")]
    SingularKernel { min_eig: f64, threshold: f64 },

    #[error("non-finite value at time index {index} (t = {time})")]
    NonFinite { index: usize, time: f64 },

    #[error("divergence in replica with seed {seed} at step {step}: |f| = {value:e}")]
    Divergence { seed: u64, step: usize, value: f64 },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("data format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
