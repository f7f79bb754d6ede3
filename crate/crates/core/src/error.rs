use thiserror::Error;

/// Errors raised by the laboratory. Falsification events are not errors:
/// they are reported through the verification reports.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Input(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Precondition(msg.into()))
}

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Range(msg.into()))
}
