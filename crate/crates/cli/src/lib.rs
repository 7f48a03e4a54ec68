//! Driver behind the `algebroid-pbw` binary: problem documents, the five
//! commands, JSON run reports and certificate rechecking.

pub mod commands;
pub mod document;
pub mod recheck;
pub mod report;

pub use commands::{run, Command, RunOptions};
pub use document::{parse_document, Problem, ProblemDocument};
pub use report::{CommandResult, RunReport, SCHEMA};

use thiserror::Error;

/// Exit codes shared by every command.
pub mod exit {
    pub const OK: i32 = 0;
    /// Invalid document, nonvanishing class, missing map, failed recheck.
    pub const NEGATIVE: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    /// Parse and schema errors, unknown modules, unsupported backends.
    pub const INPUT: i32 = 3;
    pub const BUDGET: i32 = 4;
    /// An internal identity failed. Always a bug.
    pub const INTERNAL: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown module {0:?}")]
    UnknownModule(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] apbw_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use apbw_core::Error as E;
        match self {
            CliError::Core(E::Budget { .. }) => exit::BUDGET,
            CliError::Core(E::Internal(_)) => exit::INTERNAL,
            _ => exit::INPUT,
        }
    }

    pub fn category(&self) -> &'static str {
        use apbw_core::Error as E;
        match self {
            CliError::Parse(_) | CliError::Core(E::Parse { .. }) => "parse",
            CliError::Schema(_) | CliError::Core(E::Structural(_) | E::RingMismatch(_)) => "schema",
            CliError::UnknownModule(_) => "unknown_module",
            CliError::Io(_) => "io",
            CliError::Core(E::Unsupported(_)) => "unsupported",
            CliError::Core(E::Budget { .. }) => "budget",
            CliError::Core(E::Contract(_) | E::Truncation { .. }) => "contract",
            CliError::Core(E::Internal(_)) => "internal",
        }
    }
}
