use std::path::PathBuf;

use crate::objective::LossBreakdown;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{}: rejected rows with non-finite values (0-based): {rows:?}", path.display())]
    NonFinite { path: PathBuf, rows: Vec<usize> },

    #[error("{}: file contains no records", .0.display())]
    EmptyFile(PathBuf),

    #[error("unknown class id {id}; dataset has {available:?}")]
    UnknownClass { id: usize, available: Vec<usize> },

    #[error("series of length {len} is shorter than n_fft = {n_fft}; use a smaller n_fft")]
    SeriesTooShort { len: usize, n_fft: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite loss at step {step}; last breakdown: {last}")]
    NonFiniteLoss { step: u64, last: Box<LossBreakdown> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("checkpoint {}: {msg}", path.display())]
    Checkpoint { path: PathBuf, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
