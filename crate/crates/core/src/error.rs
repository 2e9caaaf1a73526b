use thiserror::Error;

use crate::library::Role;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty library")]
    EmptyLibrary,

    #[error("unknown feature {role}:{name}")]
    UnknownFeature { role: Role, name: String },

    #[error("unknown movie id {0}")]
    UnknownMovie(String),

    #[error("invalid feature key {0:?}, expected role:name")]
    InvalidFeatureKey(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("value {value} at index {index} is outside the {mode} domain")]
    InvalidConfig {
        index: usize,
        value: f64,
        mode: &'static str,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("undefined MAPE at index {0}")]
    UndefinedMape(usize),

    #[error("locked set exceeds budget")]
    LockedExceedsBudget,

    #[error("candidate set too large: {size} > {max}")]
    TooManyCandidates { size: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tensor file at line {line}: {reason}")]
    TensorFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
