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

    #[error("{file}:{line}: {message}")]
    Parse { file: PathBuf, line: u64, message: String },

    #[error("{file}:{line}: rating {rating} outside the declared scale [{min}, {max}]")]
    RatingOutOfScale {
        file: PathBuf,
        line: u64,
        rating: f64,
        min: f64,
        max: f64,
    },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown hyperparameter `{name}` for model `{kind}`")]
    UnknownHyperparameter { kind: String, name: String },

    #[error("invalid value `{value}` for hyperparameter `{name}`: {reason}")]
    InvalidHyperparameter {
        name: String,
        value: String,
        reason: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("rank-deficient surrogate design with l2_lambda = 0; use l2_lambda > 0")]
    RankDeficient,

    #[error("scoring sample {sample} (user {user}, item {item}) failed: {reason}")]
    Scoring {
        sample: usize,
        user: usize,
        item: usize,
        reason: String,
    },

    #[error("every grid configuration failed: {0}")]
    GridExhausted(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
