use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("conceptor spectrum outside [0, 1] (eigenvalue {0:e})")]
    SpectrumOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("too many rejected lines in {what}: {rejected} of {total} (first: {first})")]
    TooManyRejects {
        what: &'static str,
        rejected: usize,
        total: usize,
        first: String,
    },

    #[error("degenerate training corpus: every sentence vector is zero")]
    DegenerateCorpus,

    #[error("no stop word found in the vocabulary")]
    NoStopWords,

    #[error("empty deletion list: no common directions stored")]
    EmptyDeletionList,

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("all {0} pairs skipped: every pair has a zero embedding")]
    AllPairsSkipped(usize),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_path(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
