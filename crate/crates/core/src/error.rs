use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("mode count mismatch: expected {expected}, got {got}")]
    ModeMismatch { expected: usize, got: usize },

    #[error("mode index {index} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { index: usize, num_modes: usize },

    #[error("amplitude vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },

    /// Returned by `partial_trace` when asked to keep no modes.
    #[error("partial trace needs at least one mode to keep")]
    EmptyKeep,

    #[error("state has zero weight")]
    ZeroWeight,

    #[error("state is (numerically) the zero vector")]
    ZeroVector,

    #[error("truncation leakage {leakage:.3e} exceeds limit {limit:.1e}")]
    Leakage { leakage: f64, limit: f64 },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Conditioning event with vanishing probability.
    #[error("acceptance probability {0:.3e} is below 1e-15")]
    Degenerate(f64),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
