use std::fmt::Display;

/// Failure classes that map onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Display) -> Self {
        Self::Config(msg.to_string())
    }

    pub fn runtime(msg: impl Display) -> Self {
        Self::Runtime(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<gpcr_core::Error> for CliError {
    fn from(e: gpcr_core::Error) -> Self {
        Self::runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::runtime(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::runtime(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
