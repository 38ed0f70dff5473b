//! Failures of a run, each with its process exit code.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed JSON, schema violations and unknown names.
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed input describing an invalid system or run.
    #[error("{0}")]
    Semantic(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Semantic(_) | CliError::Io(_) => 3,
            CliError::Budget(_) => 5,
        }
    }
}

impl From<bowen::Error> for CliError {
    fn from(e: bowen::Error) -> Self {
        match e {
            bowen::Error::Budget(m) => CliError::Budget(m),
            other => CliError::Semantic(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
