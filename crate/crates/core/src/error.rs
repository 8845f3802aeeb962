use std::path::PathBuf;

use thiserror::Error;

use crate::census::GCountTable;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size limit exceeded: {what} = {value} (max {max})")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// The enumeration ran out of budget. The table holds every size that
    /// was completed before the budget tripped.
    #[error("budget exceeded after completing k = {}: {reason}", .partial.k_max())]
    Budget {
        reason: String,
        partial: Box<GCountTable>,
    },

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
