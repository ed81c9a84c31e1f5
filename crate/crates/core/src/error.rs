use thiserror::Error;

use crate::geometry::EdgeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("unknown edge id {0:?}")]
    UnknownEdge(EdgeId),

    #[error("unknown vertex id {0}")]
    UnknownVertex(u32),

    #[error("configuration has {got} edges, graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("operation requires the TB boundary condition")]
    NotTopBottom,

    #[error("top and bottom are connected")]
    TopBottomConnected,

    #[error("state violates the coupling constraints: {0}")]
    InvalidState(String),

    #[error("graph too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("observer failed: {0}")]
    Observer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
