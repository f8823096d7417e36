use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolabError {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("index {index} out of range (expected < {bound})")]
    IndexOutOfRange { index: u128, bound: u128 },

    #[error("instance too large: {what} = {actual} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, PercolabError>;
