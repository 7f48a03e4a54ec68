use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed presentation data (wrong table sizes, bad indices).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("ring mismatch: {0}")]
    RingMismatch(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// A documented precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An identity that must hold by construction failed; indicates a bug.
    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("word of length {length} exceeds truncation {truncation}")]
    Truncation { length: usize, truncation: usize },

    #[error("budget of {budget} critical pairs exhausted after {examined}")]
    Budget { budget: usize, examined: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
