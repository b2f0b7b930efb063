use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HalError>;

#[derive(Debug, Error)]
pub enum HalError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("forward cache does not match parameters: {0}")]
    CacheMismatch(String),

    #[error("wrong magic number in {path}: expected {expected}, found {found}")]
    WrongMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("truncated file {0}")]
    Truncated(PathBuf),

    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("probability row {row} is not normalized (sum {sum})")]
    NotNormalized { row: usize, sum: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
