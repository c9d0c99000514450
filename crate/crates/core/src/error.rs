use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("file length {bits} is not divisible by {divisor}")]
    Indivisible { bits: u64, divisor: u64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("decoding failed for user {user}: {reason}")]
    Reconstruction { user: usize, reason: String },

    #[error("subpiece not cached by user {user}: {what}")]
    NotCached { user: usize, what: String },

    #[error("erasure code: {0}")]
    Erasure(String),

    #[error("instance too large: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
