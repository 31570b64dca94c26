use std::fmt;

use biphoton_core::Error as CoreError;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, invalid configuration values, unreadable paths.
    Usage(String),
    /// Malformed config or tag files.
    Parse(String),
    /// The requested statistic has no defined normalization.
    Undefined(String),
    /// A self-test check did not hold.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Undefined(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Undefined(m) => write!(f, "analysis undefined: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::UndefinedNormalization(m) => CliError::Undefined(m),
            e if e.is_parse() => CliError::Parse(e.to_string()),
            CoreError::Io(io) if io.kind() == std::io::ErrorKind::InvalidData => CliError::Parse(io.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
