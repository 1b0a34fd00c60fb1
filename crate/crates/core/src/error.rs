use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::format::Vendor;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("access of {len} bytes at offset {offset} exceeds length {total}")]
    OutOfBounds { offset: u64, len: u64, total: u64 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt structure: {0}")]
    CorruptStructure(String),

    #[error("corrupt container: {0}")]
    CorruptContainer(String),

    #[error("tag {0} is absent from the directory")]
    TagAbsent(u16),

    #[error("{0} stores label and macro as one image; the macro cannot be kept")]
    LabelNotSeparable(Vendor),

    #[error("cannot replace `{key}` with a same-length value: {reason}")]
    ReplacementConstraintViolation { key: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stream session already finalized")]
    SessionFinalized,

    #[error("patch {index} of {total} could not be applied: {source}")]
    PatchFailed {
        index: usize,
        total: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptStructure(msg.into())
    }

    pub(crate) fn container(msg: impl Into<String>) -> Self {
        Error::CorruptContainer(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedFormat(_) => 1,
            Error::CorruptStructure(_)
            | Error::CorruptContainer(_)
            | Error::OutOfBounds { .. }
            | Error::TagAbsent(_) => 2,
            Error::Io { .. } | Error::SessionFinalized => 3,
            Error::LabelNotSeparable(_) | Error::ReplacementConstraintViolation { .. } => 4,
            Error::InvalidArgument(_) => 5,
            Error::PatchFailed { source, .. } => source.exit_code(),
        }
    }
}
