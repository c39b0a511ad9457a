use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("{context}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("unknown class id {id} (class count {count})")]
    UnknownClass { id: usize, count: usize },

    #[error("duplicate class id {id}")]
    DuplicateClassId { id: usize },

    #[error("threshold {value} out of range, expected [0, 1]")]
    ThresholdOutOfRange { value: f64 },

    #[error("relation endpoint {index} out of bounds for {len} detections")]
    RelationOutOfBounds { index: usize, len: usize },

    #[error("bounding box [{x_min},{y_min}]..[{x_max},{y_max}] out of bounds for {width}x{height} image")]
    BboxOutOfBounds {
        x_min: usize,
        y_min: usize,
        x_max: usize,
        y_max: usize,
        width: usize,
        height: usize,
    },

    #[error("empty readout: graph has no nodes")]
    EmptyReadout,

    #[error("{context}: non-finite value")]
    NonFinite { context: String },

    #[error("schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },

    #[error("non-monotonic timestep: frame {frame} has t={got} after t={prev}")]
    NonMonotonicTimestep { frame: usize, prev: u64, got: u64 },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("detection {detection}: {source}")]
    Detection {
        detection: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("expert labels required but absent from trace")]
    MissingExpertLabels,

    #[error("weights file is missing matrix '{name}'")]
    MissingWeight { name: String },

    #[error("invalid config: {message}")]
    InvalidConfig { message: String },

    #[error("snapshot does not match this run: {message}")]
    SnapshotMismatch { message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn dims(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }

    /// Wrap an error with the index of the trace frame it occurred in.
    pub fn in_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }

    /// Wrap an error with the index of the detection it occurred in.
    pub fn in_detection(self, detection: usize) -> Self {
        Error::Detection {
            detection,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
