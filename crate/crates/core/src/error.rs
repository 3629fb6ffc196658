use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric {metric} expects {expected} objects, found {found}")]
    EncodingMismatch {
        metric: &'static str,
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid object #{index}: {reason}")]
    InvalidObject { index: usize, reason: String },

    #[error("distance between objects {i} and {j}: {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pooled covariance is singular; use a positive ridge")]
    SingularCovariance,

    #[error("{0} is not supported here")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
