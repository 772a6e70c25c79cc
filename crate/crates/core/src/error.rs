use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("row {row}: duplicate response for subject `{subject}` on task `{task}`")]
    DuplicateRow {
        row: usize,
        subject: String,
        task: String,
    },
    #[error("empty rating pool")]
    EmptyPool,
    #[error("rating {0} is not on the scale")]
    OffScale(f64),
    #[error("no task has at least {0} raters")]
    NoTasks(usize),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("subject `{0}` is not a rater of this task")]
    NotInTask(String),
    #[error("non-finite parameter for subject `{subject}` at iteration {iteration}")]
    NonFinite { subject: String, iteration: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn row(row: usize, msg: impl Into<String>) -> Self {
        Error::Row {
            row,
            msg: msg.into(),
        }
    }

    /// True for input-shape problems (missing columns, bad rows) as opposed to
    /// numerical or I/O failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Row { .. }
                | Error::DuplicateRow { .. }
                | Error::Csv(_)
                | Error::Parse { .. }
                | Error::Invalid(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
