use std::io;

use thiserror::Error;

/// Errors produced by the simulator, the tag-stream codecs and the analyzers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simulation would produce ~{expected:.3e} tags, above the limit of {limit:.0e}")]
    ResourceLimit { expected: f64, limit: f64 },

    #[error("bad magic {found:02x?}, expected \"BPL1\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported tag-stream version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated tag stream: expected {expected} bytes of records, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("tag stream has {0} trailing bytes after the last record")]
    TrailingBytes(u64),

    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("undefined normalization: {0}")]
    UndefinedNormalization(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors raised while decoding a tag file.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::UnsupportedVersion(_)
                | Error::Truncated { .. }
                | Error::TrailingBytes(_)
                | Error::Csv { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
