use alloc::string::String;

/// Errors produced by the simulation and analysis core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("numerical failure in segment '{segment}': {reason}")]
    NumericalFailure { segment: String, reason: String },
    #[error("SPAM model is not invertible for species {0}")]
    NonInvertibleModel(String),
    #[error("no later data after step {0}")]
    NoLaterData(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
