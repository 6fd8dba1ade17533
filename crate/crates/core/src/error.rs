use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}:{line}: {reason}")]
    BadLexicon {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: bad embedding header: {reason}")]
    BadHeader { path: PathBuf, reason: String },

    #[error("{context}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: non-finite embedding component")]
    NonFinite { path: PathBuf, line: usize },

    #[error("{path}: header promises {expected} vectors but file ends after {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("sample size {requested} invalid for corpus of {available} documents")]
    BadSampleSize { requested: usize, available: usize },

    #[error("cannot fit a model on an empty corpus")]
    EmptyCorpus,

    #[error("similarity matrix needs at least 2 documents, got {0}")]
    MatrixTooSmall(usize),

    #[error("document index {index} out of range for {n} documents")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{labels} labels supplied for {n} documents")]
    LengthMismatch { labels: usize, n: usize },

    #[error("soft cosine needs a term similarity matrix")]
    MissingTermMatrix,

    #[error("{method} needs an embedding table")]
    MissingEmbeddings { method: String },

    #[error("invalid term similarity matrix: {0}")]
    InvalidTermMatrix(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: bad matrix file: {reason}")]
    BadMatrixFile { path: PathBuf, reason: String },

    #[error("{path}:{line}: bad corpus cache line: {source}")]
    BadCache {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{method}: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the environment (files, permissions) rather than
    /// of the input data or call contract.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Method { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
