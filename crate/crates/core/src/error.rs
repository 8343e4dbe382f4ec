use std::path::PathBuf;

use crate::tensor::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape {0}: every dimension must be at least 1")]
    EmptyDimension(Shape),

    #[error("shape {0} has more than 2^31 elements")]
    DimensionOverflow(Shape),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("{context}: index out of range ({detail})")]
    OutOfRange {
        context: &'static str,
        detail: String,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("layer {index} ({kind}): {reason}")]
    Layer {
        index: usize,
        kind: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("backward called without a preceding training-mode forward pass")]
    NoForwardCache,

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("unsupported audio: {0}")]
    Audio(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn mismatch(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
