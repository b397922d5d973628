use thiserror::Error;

/// Errors produced by grids, solvers and drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} out of range for axis {axis} of length {len}")]
    OutOfRange {
        axis: usize,
        index: usize,
        len: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("characteristic feet cross near node {node}; reduce the time step")]
    CharacteristicsCrossed { node: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite solution value at t = {time}")]
    NonFinite { time: f64 },

    #[error("error entry {index} is zero; observed order is undefined")]
    ZeroError { index: usize },

    #[error("impulse responses disagree by {deviation:e}; scheme is not linear and translation invariant")]
    NotTranslationInvariant { deviation: f64 },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
