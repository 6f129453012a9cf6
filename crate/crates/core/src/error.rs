use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("feature file is empty")]
    EmptyFile,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} columns, found {found}")]
    WrongColumnCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("line {line}, column {column}: non-finite value {value:?}")]
    NonFiniteValue {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("target class {0:?} not found")]
    TargetClassNotFound(String),
    #[error("covariance of cluster {0} is not positive semi-definite")]
    NonPsdCovariance(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("infeasible C = {c}: {reason}")]
    InfeasibleC { c: f64, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("projection diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("evaluation input is empty")]
    EmptyEvaluation,
    #[error("prediction and truth ids differ: {0}")]
    IdMismatch(String),

    #[error("model references PCA {expected} but was given PCA {found}")]
    PcaHashMismatch { expected: String, found: String },
    #[error("grid search: {0}")]
    GridSearch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
