use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("perplexity calibration failed for point {point} after {iterations} iterations")]
    Calibration { point: usize, iterations: usize },

    #[error("optimizer diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("logarithm argument {value} is not positive (measure too spread for n = {n})")]
    NonPositiveLogArgument { value: f64, n: f64 },

    #[error("moment constraint violated: a = {a} exceeds sqrt(b) = {sqrt_b}")]
    MomentConstraint { a: f64, sqrt_b: f64 },

    #[error("enumeration limited to n <= {max}, got n = {n}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
