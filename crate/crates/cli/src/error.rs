use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// An input file is missing or cannot be parsed.
    #[error("input error: {0}")]
    Input(String),
    /// Flags or a configuration file are invalid.
    #[error("config error: {0}")]
    Config(String),
    /// Anything that fails while running, such as writing outputs.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(err: &CliError) -> Self {
        ExitCode::from(err.exit_code())
    }
}
