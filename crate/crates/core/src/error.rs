use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame {frame} is beyond the end of the sequence ({len} frames)")]
    OutOfBounds { frame: usize, len: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: box width and height must be positive")]
    NonPositiveBox { path: String, line: usize },

    #[error("reinstatement needs embeddings but none were provided")]
    MissingEmbedding,

    #[error("expected frame {expected}, got frame {got}")]
    FrameGap { expected: usize, got: usize },

    #[error("provider returned no track response for track {0}")]
    MissingResponse(u64),

    #[error("track has no embeddings")]
    NoEmbeddings,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty {0} set")]
    EmptySet(&'static str),

    #[error("sequence mismatch: prediction has {pred} frames, ground truth has {gt}")]
    SequenceMismatch { pred: usize, gt: usize },

    #[error("predicted track {0} has no score")]
    MissingScores(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error("training diverged: non-finite loss at step {0}")]
    Diverged(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
