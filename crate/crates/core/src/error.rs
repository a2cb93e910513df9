use thiserror::Error;

use crate::sketch::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("neighbor index {index} out of range for vertex {vertex} with degree {degree}")]
    NeighborOutOfRange {
        vertex: usize,
        index: usize,
        degree: usize,
    },

    #[error("vertices {s} and {t} are not connected (infinite resistance)")]
    Disconnected { s: usize, t: usize },

    #[error("graph is not connected")]
    NotConnected,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "spectral estimate did not converge within {iterations} iterations \
         (best lambda2 = {lambda2:.6e}, kappa = {kappa:.6e})"
    )]
    NoConvergence {
        iterations: usize,
        lambda2: f64,
        kappa: f64,
    },

    #[error("dense oracle is capped at {cap} vertices but the graph has {n}; use an estimator instead")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("oracle paths disagree: pseudo-inverse {pinv} vs submatrix inverse {grounded}")]
    OracleMismatch { pinv: f64, grounded: f64 },

    #[error("structural precondition violated: {0}")]
    Structure(String),

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("random regular generation failed after {0} restarts")]
    RetryCapExceeded(usize),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
