use std::path::PathBuf;

use thiserror::Error;
use unifilter::FilterError;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Field { key: &'static str, reason: String },
    #[error("regret curve needs at least 3 horizons, got {0}")]
    TooFewHorizons(usize),
    #[error("regret curve horizons must be strictly increasing")]
    UnsortedHorizons,
    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

impl BenchError {
    pub(crate) fn field(key: &'static str, reason: impl Into<String>) -> Self {
        BenchError::Field {
            key,
            reason: reason.into(),
        }
    }
}
