use crate::itemset::Itemset;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid support threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid store configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate {candidate} has length {actual}, store expects {expected}")]
    LengthMismatch {
        candidate: Itemset,
        expected: usize,
        actual: usize,
    },

    #[error("candidate {0} is already present in the store")]
    DuplicateCandidate(Itemset),

    #[error("instance too large for brute-force mining: {0}")]
    InstanceTooLarge(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid generator configuration: {0}")]
    InvalidGenerator(String),

    #[error("mapper for split {split_id} failed: {source}")]
    SplitFailed {
        split_id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
