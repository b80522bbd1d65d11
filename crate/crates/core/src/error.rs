use thiserror::Error;

/// Errors raised by the laboratory operations.
///
/// Variants are split between input validation (bad parameters, schema
/// violations, precision shortfalls) and runtime failures (I/O). The CLI maps
/// the first group to exit code 2 and the rest to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("sequence is not strictly increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("insufficient precision: need at least {required} bits, have {actual}")]
    PrecisionShortfall { required: u64, actual: u64 },

    #[error("continued fraction too short: need depth at least {required}, have {actual}")]
    InsufficientDepth { required: usize, actual: usize },

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("schema violation in `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than the runtime.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
