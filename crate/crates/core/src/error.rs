use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no gaps")]
    NoGaps,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("user(s) present in no source: {0:?}")]
    UserInNoSource(Vec<String>),
    #[error("roster misaligned: {0}")]
    Misaligned(String),
    #[error("step size too large (loss became non-finite at epoch {epoch}); try eta = {suggested}")]
    Diverged { epoch: usize, suggested: f64 },
    #[error("degenerate class: training data must contain both signs")]
    DegenerateClass,
    #[error("empty labeled set")]
    EmptyLabeledSet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stratum {name} has {size} members, fewer than {folds} folds")]
    StratumTooSmall {
        name: String,
        size: usize,
        folds: usize,
    },
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
