use thiserror::Error;

/// Errors raised by the fusion pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("depth map has no filled pixels")]
    EmptyMap,

    #[error("no valid pixels to evaluate")]
    EmptyValidSet,

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("occupancy grids have different geometry")]
    GridMismatch,

    #[error("kernel matrix is not positive definite after jitter escalation (patch {patch})")]
    SingularKernel { patch: usize },

    #[error("classifier training set needs both classes, missing {0}")]
    DegenerateLabels(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("value out of range at line {line}: {message}")]
    Range { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
