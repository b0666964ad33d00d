use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported-structure: {0}")]
    UnsupportedStructure(String),

    #[error("invalid-counting-numbers: {0}")]
    InvalidCountingNumbers(String),

    #[error("not-a-tree: {0}")]
    NotATree(String),

    #[error("schedule-invalid: {0}")]
    ScheduleInvalid(String),

    #[error("not-a-reparameterization: probe deviation {deviation:e} exceeds {tolerance:e}")]
    NotAReparameterization { deviation: f64, tolerance: f64 },

    #[error("state space too large: {states} assignments exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: f64, limit: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
