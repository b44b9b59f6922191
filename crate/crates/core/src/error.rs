use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SahdlError>;

#[derive(Debug, Error)]
pub enum SahdlError {
    /// Caller supplied an out-of-range or inconsistent parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data violates a domain invariant (non-finite value, bad label).
    #[error("invalid input: {0}")]
    Input(String),

    /// A file could not be parsed.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An iterate became non-finite.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A construction guarantee was broken.
    #[error("internal error: {0}")]
    Internal(String),
}

impl SahdlError {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            SahdlError::Parameter(_) => 2,
            SahdlError::Input(_) | SahdlError::Format { .. } | SahdlError::Io { .. } => 3,
            SahdlError::Numerical(_) | SahdlError::Internal(_) => 4,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SahdlError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SahdlError::Io {
            path: path.into(),
            source,
        }
    }
}
