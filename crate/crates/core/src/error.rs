use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A required column is absent.
    MissingColumn(String),
    /// Malformed cell or row; `row` is 0-based over data rows.
    Parse { row: usize, message: String },
    /// A configuration value is out of range; `key` names it.
    InvalidConfig { key: String, message: String },
    InvalidInput(String),
    Degenerate(String),
    NoRows,
    DimensionMismatch { expected: usize, found: usize },
    KTooLarge { k: usize, available: usize },
    /// A pipeline stage failed.
    Stage { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig { key: key.into(), message: message.into() }
    }

    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MissingColumn(c) => write!(f, "schema error: missing column \"{c}\""),
            Error::Parse { row, message } => write!(f, "parse error at row {row}: {message}"),
            Error::InvalidConfig { key, message } => write!(f, "invalid `{key}`: {message}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate: {m}"),
            Error::NoRows => f.write_str("no rows"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "width mismatch: expected {expected} columns, found {found}")
            }
            Error::KTooLarge { k, available } => {
                write!(f, "k exceeds available neighbors (k = {k}, available = {available})")
            }
            Error::Stage { index, source } => write!(f, "stage {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Stage { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
