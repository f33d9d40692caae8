use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems found while decoding one of the supported file formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad magic number {found} (expected {expected})")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("file length {len} is not a multiple of the {record}-byte record size")]
    RecordSize { len: usize, record: usize },
    #[error("row {row}: unknown category {value:?}")]
    UnknownCategory { row: usize, value: String },
    #[error("row {row}: column {column:?} is not numeric ({value:?})")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{}: {kind}", path.display())]
    Format { path: PathBuf, kind: FormatError },
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    CheckpointParse(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u64, expected: u64 },
    #[error("inconsistent checkpoint: {0}")]
    CheckpointInvalid(String),
    #[error("training diverged at iteration {iteration} (loss {loss})")]
    Divergence { iteration: usize, loss: f64 },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, kind: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            kind,
        }
    }
}
