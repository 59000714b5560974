//! Error type shared across the workbench, with a stable mapping onto process
//! exit codes so scripts can distinguish "no result" from "budget exhausted".

use thiserror::Error;

/// Process exit codes used by the CLI and documented in the README.
pub mod exit_code {
    /// Operation succeeded and produced a result.
    pub const SUCCESS: i32 = 0;
    /// A search completed exhaustively and found nothing.
    pub const NONE: i32 = 1;
    /// Malformed input (parse errors, undeclared symbols, bad flags).
    pub const INPUT: i32 = 2;
    /// Inputs are well-formed but mutually inconsistent (wrong tile set for a
    /// tiling, non-confluent rewriting system where confluence is required,
    /// inconsistent labels).
    pub const CONSISTENCY: i32 = 3;
    /// A configured budget (rule count, node count, length cap) ran out
    /// before the question was settled.
    pub const BUDGET: i32 = 4;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code for the CLI. "No result" (exit 1) is not an error and is
    /// handled by the CLI directly; errors map to 2..4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => exit_code::INPUT,
            Error::Consistency(_) => exit_code::CONSISTENCY,
            Error::Budget(_) => exit_code::BUDGET,
            Error::Io(_) | Error::Json(_) => exit_code::INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
