//! Front-end error type: everything the pipeline can not recover from,
//! carrying enough position information to act on.

use std::fmt;
use std::io;
use std::path::PathBuf;

use noether_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    /// Declaration file violated the schema; the message carries the
    /// line/column span reported by the deserializer.
    Declaration {
        path: PathBuf,
        message: String,
    },
    Core(CoreError),
    Report(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Declaration { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Report(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
