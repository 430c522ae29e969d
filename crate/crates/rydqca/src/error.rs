use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Config problem anchored to a line of the source document.
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("numerical failure in segment '{segment}': {reason}")]
    Numerical { segment: String, reason: String },
    #[error("{0}")]
    Core(rydqca_core::Error),
    #[error("incompatible runs: {0}")]
    Incompatible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
}

impl From<rydqca_core::Error> for HarnessError {
    fn from(e: rydqca_core::Error) -> Self {
        match e {
            rydqca_core::Error::NumericalFailure { segment, reason } => HarnessError::Numerical { segment, reason },
            other => HarnessError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

pub(crate) fn format_err(path: impl Into<PathBuf>, message: impl Into<String>) -> HarnessError {
    HarnessError::Format { path: path.into(), message: message.into() }
}
