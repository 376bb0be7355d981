use thiserror::Error;

use crate::inference::IterationRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A value outside the domain of a function or type.
    #[error("domain error: {0}")]
    Domain(String),

    /// A contour leaves the unit square.
    #[error("range error: {0}")]
    Range(String),

    /// An operation was called on inputs that violate its precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (last log-likelihood {last_loglik})")]
    Convergence {
        iterations: usize,
        last_loglik: f64,
        coefficients: Vec<f64>,
        trace: Vec<IterationRecord>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
