use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: shape mismatches, out-of-range indices, bad labels.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation would exceed the configured total-dimension cap.
    #[error("dimension {requested} exceeds the configured cap {cap}")]
    Capacity { requested: usize, cap: usize },

    /// A quantity that must be real or Hermitian came out otherwise.
    #[error("numerical consistency violated: {0}")]
    NumericalConsistency(String),

    /// Input data does not satisfy an operation's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Inconsistent experimental data.
    #[error("data error: {0}")]
    Data(String),

    /// An iterative routine failed to converge.
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
