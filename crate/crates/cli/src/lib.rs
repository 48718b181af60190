//! Driver for the `hranneal` binary: configuration, run orchestration and
//! CSV output. Exposed as a library so the acceptance suite can reuse the
//! verification checks.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("algorithm failure: {0}")]
    Algorithm(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Algorithm(_) | CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<hranneal::Error> for CliError {
    fn from(e: hranneal::Error) -> Self {
        use hranneal::Error as E;
        match e.root() {
            E::Config(_) | E::InvalidInput(_) | E::Model(_) => CliError::Config(e.to_string()),
            _ => CliError::Algorithm(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
