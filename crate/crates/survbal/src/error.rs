use thiserror::Error;

/// Failure of a CLI run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or arguments (exit code 2).
    #[error("invalid `{key}`: {message}")]
    Config { key: String, message: String },
    /// Anything that went wrong while running (exit code 1).
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<survbal_core::Error> for CliError {
    fn from(e: survbal_core::Error) -> Self {
        match e {
            survbal_core::Error::InvalidConfig { key, message } => CliError::Config { key, message },
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Prefix the key of a configuration error; other errors pass through.
pub(crate) fn in_section(prefix: &str, e: survbal_core::Error) -> CliError {
    match e {
        survbal_core::Error::InvalidConfig { key, message } => CliError::Config { key: format!("{prefix}.{key}"), message },
        other => other.into(),
    }
}
