use thiserror::Error;

/// Errors raised by the filtering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window head {window_head} does not match current observation {observation}")]
    WindowMismatch { window_head: f64, observation: f64 },

    #[error("block holds {got} samples, expected {expected}")]
    BlockSize { expected: usize, got: usize },

    #[error("invalid constant `{name}`: {reason}")]
    InvalidConstant { name: &'static str, reason: String },

    #[error("observation sequence is empty")]
    EmptyInput,

    #[error("invalid interval [{r}, {s}] for horizon {horizon}")]
    InvalidInterval { r: usize, s: usize, horizon: usize },

    #[error("invalid signal spec: {0}")]
    InvalidSignal(String),

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("replay file line {line}: {reason}")]
    Replay { line: usize, reason: String },

    #[error("replay file is empty")]
    EmptyReplay,

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep its rendered form.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for FilterError {
    fn from(e: std::io::Error) -> Self {
        FilterError::Io(IoError(e.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, FilterError>;
