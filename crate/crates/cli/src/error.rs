use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Physics(lambdaflow::Error),

    #[error("integration failed: {0}")]
    Integration(lambdaflow::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed data: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Physics(_)
            | CliError::Data { .. }
            | CliError::ValidationFailed(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Integration(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl From<lambdaflow::Error> for CliError {
    fn from(e: lambdaflow::Error) -> Self {
        if e.is_integration_failure() {
            CliError::Integration(e)
        } else {
            CliError::Physics(e)
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
