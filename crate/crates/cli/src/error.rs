use std::path::Path;

use graphon_dyn::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    /// Prefixes the message with the config field it concerns.
    pub fn at(self, field: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{field}: {m}")),
            CliError::Unsupported(m) => CliError::Unsupported(format!("{field}: {m}")),
            other => other,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

/// Model errors come from user input, except size limits.
impl From<graphon_dyn::Error> for CliError {
    fn from(e: graphon_dyn::Error) -> Self {
        match e.kind() {
            ErrorKind::UnsupportedSize => CliError::Unsupported(e.to_string()),
            ErrorKind::Invalid => CliError::Config(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
