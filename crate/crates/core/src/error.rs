use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("operation requires the exponential-base view")]
    View,

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("quadrature did not reach tolerance {requested:e} (estimate {achieved:e} after {evaluations} evaluations)")]
    ToleranceNotMet {
        requested: f64,
        achieved: f64,
        evaluations: usize,
    },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error{}: {message}", field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
    Parse { field: Option<String>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
