use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{quantity} = {value} is outside the valid interval [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid {quantity}: {reason}")]
    Domain {
        quantity: &'static str,
        reason: String,
    },
    #[error("users are not ordered by decreasing composite gain (index {index})")]
    Unordered { index: usize },
    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("dimension mismatch: expected {expected} {what}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.display().to_string(), message: err.to_string() }
    }
}
