use std::fmt;
use std::path::PathBuf;

/// Which of the two CCA inputs an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Data,
    Noise,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Data => f.write_str("data"),
            Side::Noise => f.write_str("noise"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("insufficient samples: {samples} samples, need at least {required}")]
    InsufficientSamples { samples: usize, required: usize },

    #[error("degenerate input: {0} recording has numerical rank 0 after mean-centering")]
    Degenerate(Side),

    #[error("window of {window} samples is below the minimum of {required} for this channel count")]
    WindowTooShort { window: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
