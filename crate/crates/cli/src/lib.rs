//! Staged pipeline behind the `sql2circuits` command.

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod workdir;

pub use commands::{execute, Command, Metric, Report, Status};
pub use config::{Overrides, RunConfig, Task};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{what}; run `sql2circuits {run}` first")]
    Prerequisite { what: String, run: String },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Prerequisite { .. } => 3,
            CliError::Data(_) => 4,
        }
    }
}
