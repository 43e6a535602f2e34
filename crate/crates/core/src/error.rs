use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("task sizes must be non-empty")]
    EmptySizes,
    #[error("task size at index {index} must be at least 1")]
    ZeroSize { index: usize },
    #[error("temperature must be finite and positive, got {0}")]
    InvalidTemperature(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("progress must lie in [0, 1], got {0}")]
    InvalidProgress(f64),
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error("invalid parity config: {0}")]
    InvalidParityConfig(String),
    #[error("bit index {index} out of range for input of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("zipf exponent must be finite and positive, got {0}")]
    InvalidZipfAlpha(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in {param}")]
    NonFiniteGradient { param: String },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("malformed record on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
