use thiserror::Error;

/// Failure modes shared by every numerical entry point.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested object would exceed the configured size limit.
    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: String,
        requested: u128,
        limit: u128,
    },

    /// An iterative method stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A requested accuracy cannot be certified.
    #[error("accuracy not reached: {0}")]
    Accuracy(String),

    /// Caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A state or point that is not part of the object it was looked up in.
    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn capacity(what: impl Into<String>, requested: u128, limit: u128) -> Self {
        Error::Capacity {
            what: what.into(),
            requested,
            limit,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
