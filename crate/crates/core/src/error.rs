use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time {time} is outside [0, {t_max}]")]
    OutOfDomain { time: f64, t_max: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged at epoch {epoch} with learning rate {learning_rate}")]
    Diverged { epoch: usize, learning_rate: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{count} record(s) have time above t_max = {t_max}: rows {rows:?}")]
    TimesAboveHorizon {
        t_max: f64,
        count: usize,
        /// Zero-based record indices, truncated to the first few offenders.
        rows: alloc::vec::Vec<usize>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
