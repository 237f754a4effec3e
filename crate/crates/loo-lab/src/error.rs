use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("feature/label length mismatch: {features} features vs {labels} labels")]
    LengthMismatch { features: usize, labels: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("capacity guard exceeded: {0}")]
    CapacityExceeded(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("label sequence is not attainable by any hypothesis in the reference class")]
    UnrealizableSequence,

    #[error("undefined genie: no candidate test label keeps the sequence realizable")]
    UndefinedGenie,
}

pub type Result<T> = std::result::Result<T, Error>;
