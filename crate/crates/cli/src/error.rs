use std::path::PathBuf;

use fractvec_core::Error as CoreError;
use thiserror::Error;

/// Failures of a scenario run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid scenario: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("tolerance not reached: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors from the core while executing a command. Input-shape problems
/// count as scenario errors, an unmet iteration target as a tolerance
/// failure, everything else as a failed precondition.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DimensionMismatch { .. }
            | CoreError::FieldMismatch(_)
            | CoreError::Invalid(_)
            | CoreError::BadPartition(_) => CliError::Parse(e.to_string()),
            CoreError::MaxIterations { .. } => CliError::Tolerance(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}
