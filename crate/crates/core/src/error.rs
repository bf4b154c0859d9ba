use thiserror::Error;

use crate::tree::EdgeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is out of its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A tree description does not describe a rooted tree.
    #[error("malformed tree: {0}")]
    Structure(String),

    #[error("edge {0} is not part of the tree")]
    InvalidEdge(EdgeId),

    /// Input data violates the precondition of an operation
    /// (signed measure where a positive one is required, support outside a set, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (lower {lower:.3e}, upper {upper:.3e})")]
    Solver {
        solver: &'static str,
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    /// A quantity that is positive in exact arithmetic came out non-positive.
    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
