use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: String, found: String },

    #[error("direct DFT oracle refuses a {side}x{side} grid (limit {limit})")]
    OracleTooLarge { side: usize, limit: usize },

    #[error("geometry does not fit: {0}")]
    Geometry(String),

    #[error("degenerate detector signal for class {class}: positive + negative = {total:e}")]
    DegenerateSignal { class: usize, total: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },

    #[error("{}: record {record} has label byte {label}", path.display())]
    CorruptRecord {
        path: PathBuf,
        record: usize,
        label: u8,
    },

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checksum mismatch")]
    Checksum,

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
