use thiserror::Error;

use crate::graph::{EdgeId, NodeId};

#[derive(Debug, Error)]
pub enum Error {
    /// The graph, a path or a generator input violates a structural invariant.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The cutting-plane loop ran out of iterations. The bounds still bracket
    /// the modulus.
    #[error(
        "modulus solver did not converge after {iterations} iterations \
         (lower bound {lower:.6e}, upper bound {upper:.6e})"
    )]
    NonConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("no curve of positive modulus connects the given node sets")]
    NoConnection,

    /// A declared upper gradient is violated along `path`.
    #[error("upper-gradient precondition failed: violation {violation:.6e} along path {path:?}")]
    UpperGradient { violation: f64, path: Vec<NodeId> },

    #[error("edge {0} does not belong to the graph")]
    MissingEdge(EdgeId),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
