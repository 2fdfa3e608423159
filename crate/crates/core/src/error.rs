use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The variants are grouped by who is at fault: `Config` and `Usage` are
/// caller mistakes (bad parameters, mismatched shapes), `DegenerateInput`,
/// `Data` and `Parse` come from the data itself, `Training` from a solver
/// that cannot proceed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by invalid parameters or shapes rather than
    /// by the data or the runtime.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Usage(_) => true,
            Error::Row { source, .. } | Error::Fold { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
