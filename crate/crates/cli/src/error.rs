use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("ParseError at token {token}: {message}")]
    Parse { token: usize, message: String },
    #[error(transparent)]
    Core(#[from] vallab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(vallab::Error::ZeroFunction) => 2,
            CliError::Core(vallab::Error::Inconclusive(_)) => 3,
            CliError::Config(_) | CliError::Parse { .. } => 64,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
