use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid monomer code {0:?}: expected non-empty [A-Z0-9]+")]
    InvalidCode(String),
    #[error("protein sequence {0:?} has no tokens")]
    EmptySequence(String),
    #[error("sequence of length {len} exceeds the fixed input length {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("malformed vocabulary: {0}")]
    MalformedVocabulary(String),

    #[error("malformed XML at byte {offset}: {message}")]
    MalformedXml { offset: u64, message: String },
    #[error("gzip decoding failed: {0}")]
    Gzip(String),
    #[error("cannot write output {path}: {source}")]
    OutputUnwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table {path}, record {record}: {message}")]
    MalformedTable {
        path: PathBuf,
        record: u64,
        message: String,
    },

    #[error("sequence length {0} is outside the histogram range 1..=1000000")]
    LengthOutOfRange(usize),
    #[error("need at least {needed} positives to balance the dataset, got {got}")]
    TooFewPositives { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("token index {index} outside vocabulary of size {vocab_size}")]
    IndexOutOfVocab { index: u32, vocab_size: usize },
    #[error("input of length {len} is shorter than window {window}")]
    InputTooShort { len: usize, window: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("forward cache does not match the model: {0}")]
    StaleCache(String),
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("dataset does not match the model vocabulary: {0}")]
    VocabularyMismatch(String),
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("cannot write checkpoint {path}: {source}")]
    CheckpointWrite {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by non-finite arithmetic rather than bad inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient(_) | Error::NonFiniteLoss { .. }
        )
    }
}
