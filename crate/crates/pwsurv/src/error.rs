use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pwsurv_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Argument(String),
    #[error("every run of the learning-rate sweep failed ({0} runs)")]
    SweepFailed(usize),
}

impl Error {
    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(pwsurv_core::Error::Diverged { .. }) => "diverged",
            Error::Core(
                pwsurv_core::Error::TimesAboveHorizon { .. }
                | pwsurv_core::Error::OutOfDomain { .. },
            ) => "out-of-range",
            Error::Core(pwsurv_core::Error::DimensionMismatch { .. }) => "dimension",
            Error::Core(pwsurv_core::Error::EmptyDataset) => "empty-dataset",
            Error::Core(_) => "invalid",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::Argument(_) => "argument",
            Error::SweepFailed(_) => "sweep-failed",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
