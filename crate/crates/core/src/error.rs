use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Validation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset {0} contains no rows")]
    EmptyDataset(PathBuf),

    #[error("vocabulary is empty: no token reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("{path}:{line}: vector has {found} values, expected {expected}")]
    InconsistentDimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, line: usize, id: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("co-occurrence table is empty")]
    EmptyCooccurrence,

    #[error("co-occurrence weight must be positive, got {0}")]
    NonPositiveCooccurrence(f64),

    #[error("no vector for text id `{0}`")]
    MissingVector(String),

    #[error("no gold label for candidate `{0}`")]
    MissingGold(String),

    #[error("candidate `{0}` has a prediction but no similarity record")]
    MissingScore(String),

    #[error("summarizer failed on chunk {chunk}: {message}")]
    Summarizer { chunk: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
