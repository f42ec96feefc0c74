//! Pipeline driver: every stage of the experiment as a subcommand.
//!
//! The binary front-end lives in `main.rs`; the command implementations are
//! exposed as a library so integration tests can run stages in-process.

pub mod cli;
pub mod commands;
pub mod config;
pub mod digest;

use trilatent::Error;

/// A stage failure, split by when it happened: parameter/validation problems
/// exit 1, errors during stage execution exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(Error),
    Stage(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Stage(_) => 2,
        }
    }

    pub fn inner(&self) -> &Error {
        match self {
            CliError::Validation(e) | CliError::Stage(e) => e,
        }
    }

    /// One-line machine-parsable rendering: `error: <kind>: <message>`.
    pub fn report(&self) -> String {
        format!("error: {}: {}", self.inner().kind(), self.inner())
    }
}

pub type CmdResult = std::result::Result<(), CliError>;

/// Error-context adapters for the two failure phases.
pub trait Phase<T> {
    fn validation(self) -> std::result::Result<T, CliError>;
    fn stage(self) -> std::result::Result<T, CliError>;
}

impl<T> Phase<T> for std::result::Result<T, Error> {
    fn validation(self) -> std::result::Result<T, CliError> {
        self.map_err(CliError::Validation)
    }

    fn stage(self) -> std::result::Result<T, CliError> {
        self.map_err(CliError::Stage)
    }
}
