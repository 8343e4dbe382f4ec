use std::fmt;

/// Failure of a command, carrying the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or names: exit 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or inconsistent data, shapes, numerics: exit 2.
    #[error(transparent)]
    Data(#[from] impnet::Error),
    /// A check ran and failed: exit 3.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(impnet::Error::UnknownPreset(_)) => 1,
            CliError::Data(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
