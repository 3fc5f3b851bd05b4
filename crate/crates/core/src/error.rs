use thiserror::Error;

pub type Result<T> = std::result::Result<T, QgError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QgError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("corrupted field: Hermitian symmetry violated by {violation:e}")]
    NotHermitian { violation: f64 },

    #[error("field is not mean-zero (|c0| = {mean:e})")]
    NotMeanZero { mean: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode overflow: {0}")]
    ModeOverflow(String),

    #[error("zero field cannot be rescaled to a nonzero norm")]
    ZeroField,

    #[error("norm series is empty")]
    EmptySeries,

    #[error("norm series invariant violated: {0}")]
    InvalidSeries(String),

    #[error("numerical abort at step {step} (t = {t}): {reason}")]
    BlowUp { step: u64, t: f64, reason: String },
}
