//! Operator entry points for screenveil: offline runs, the frame server,
//! corpus generation and the latency budget.

pub mod commands;
pub mod config;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or unreadable input frames.
    #[error("{0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid number: {0}")]
    Numeric(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) | CliError::Numeric(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}
