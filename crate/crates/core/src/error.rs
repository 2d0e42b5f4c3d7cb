use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
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
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("unknown label {label:?} in row {row}")]
    UnknownLabel { row: usize, label: String },
    #[error("unknown distortion {0:?}")]
    UnknownDistortion(String),
    #[error("invalid n-gram: {0}")]
    InvalidNGram(String),
    #[error("weight {0} outside (0, 1]")]
    WeightOutOfRange(f64),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    InvalidModel(String),
    #[error("{0}")]
    InvalidCorpus(String),
    #[error("label sets differ: {0}")]
    LabelMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
