use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(String),

    #[error("unsupported sample rate {found} Hz (expected {expected} Hz)")]
    SampleRate { found: u32, expected: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("class id {id} out of range for {classes} classes")]
    ClassOutOfRange { id: usize, classes: usize },

    #[error("levinson recursion failed at order {order}: prediction error {error:e}")]
    NotPositiveDefinite { order: usize, error: f64 },

    #[error("wav {field}: {message}")]
    Wav { field: &'static str, message: String },

    #[error("format {path}: {message}")]
    Format { path: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short, stable tag used in the one-line CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Empty(_) => "empty",
            Error::SampleRate { .. } => "sample-rate",
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "argument",
            Error::Degenerate(_) => "degenerate",
            Error::NonFinite(_) => "non-finite",
            Error::ClassOutOfRange { .. } => "class-range",
            Error::NotPositiveDefinite { .. } => "levinson",
            Error::Wav { .. } => "wav",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
