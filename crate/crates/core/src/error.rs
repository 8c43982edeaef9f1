//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown service `{0}`")]
    UnknownService(String),

    #[error("allocation rejected: {0}")]
    InvalidAllocation(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("deprivation infeasible: {0}")]
    DeprivationInfeasible(String),

    #[error("parameter file format error: {0}")]
    ParamsFormat(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("missing model file: {0}")]
    MissingModel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
