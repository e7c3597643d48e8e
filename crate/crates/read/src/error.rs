use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: parse error at {at}: {message}")]
    Parse {
        path: PathBuf,
        at: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        source: read_core::Error,
    },

    #[error(transparent)]
    Core(#[from] read_core::Error),

    #[error("unsupported model format {0:?}")]
    UnsupportedFormat(String),

    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad data, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(read_core::Error::NumericalFailure { .. })
            | Error::Data {
                source: read_core::Error::NumericalFailure { .. },
                ..
            } => 3,
            _ => 2,
        }
    }
}
