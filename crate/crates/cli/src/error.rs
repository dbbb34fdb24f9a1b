use serde::Serialize;
use thiserror::Error;

use dpagerank::{AlgoError, GraphError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Run(#[from] AlgoError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Tolerance(String),
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord<'a> {
    pub error: &'a str,
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Graph(_) => 1,
            CliError::Run(_) | CliError::Io(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Graph(_) => "graph",
            CliError::Run(_) => "run",
            CliError::Io(_) => "io",
            CliError::Tolerance(_) => "tolerance",
        }
    }

    pub fn record(&self) -> ErrorRecord<'static> {
        ErrorRecord { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
