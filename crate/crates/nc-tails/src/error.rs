use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The rotation sweep failed to diagonalize the column Gram matrix.
    #[error("singular value iteration did not converge after {sweeps} sweeps (dim {dim})")]
    SvdNonConvergence { dim: usize, sweeps: usize },

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("{path}: line {line}: {message}")]
    SequenceParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Scenario configuration rejected; `field` is the offending JSON path.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
