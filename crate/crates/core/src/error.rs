use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Structural defects in a dependency parse. Positions are 1-based surface
/// positions as they appear in the CoNLL input.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("sentence has no root token")]
    NoRoot,
    #[error("sentence has multiple root tokens at positions {0:?}")]
    MultipleRoots(Vec<usize>),
    #[error("head links form a cycle through positions {0:?}")]
    CycleDetected(Vec<usize>),
    #[error("token {position} has head {head}, outside 0..={len}")]
    HeadOutOfRange {
        position: usize,
        head: usize,
        len: usize,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Tree(#[from] TreeError),

    #[error("invalid class count {requested} for a vocabulary of {vocab_size} words")]
    ClassCount { requested: usize, vocab_size: usize },

    #[error("invalid hyperparameters: {0}")]
    HyperParams(String),

    #[error("model format version mismatch: {0}")]
    Version(String),

    #[error("model stream truncated: {0}")]
    Truncated(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("cannot allocate {bytes} bytes for model parameters")]
    Resource { bytes: u128 },

    #[error("problem {id}: {message}")]
    Problem { id: String, message: String },

    #[error("perplexity of an empty corpus is undefined")]
    EmptyCorpus,
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
