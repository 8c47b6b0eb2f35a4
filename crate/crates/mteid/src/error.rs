use std::path::PathBuf;

use mteid_core::MteError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] MteError),
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no rule of the `{0}` policy covers the simulated observation")]
    UncoveredObservation(String),
    #[error("quadrature tolerance not reached at depth {0}")]
    MaxDepth(usize),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Core(e) => e.code(),
            Error::Parse { .. } => "E_PARSE",
            Error::UnknownTemplate(_) => "E_UNKNOWN_TEMPLATE",
            Error::Io { .. } => "E_IO",
            Error::UncoveredObservation(_) => "E_UNCOVERED_OBSERVATION",
            Error::MaxDepth(_) => "E_MAX_DEPTH",
            Error::Usage(_) => "E_USAGE",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::UnknownTemplate(_) => 3,
            Error::Core(_) | Error::UncoveredObservation(_) | Error::MaxDepth(_) => 4,
            Error::Io { .. } | Error::Usage(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
