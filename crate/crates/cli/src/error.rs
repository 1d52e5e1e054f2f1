use thiserror::Error;

/// Failures surfaced by the command line, grouped by exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io(_) => 2,
            AppError::Numeric(_) => 3,
        }
    }
}
