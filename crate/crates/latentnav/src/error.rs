use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A network layer is internally inconsistent or incompatible with its
    /// neighbors. `index` is the position of the offending layer.
    #[error("layer {index}: {reason}")]
    Config { index: usize, reason: String },

    /// An input vector or matrix has the wrong dimension.
    #[error("{context}: expected dimension {expected}, got {actual}")]
    Dim {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An input contained NaN or infinite entries.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// An argument was outside its domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// The SVD sweep loop hit its iteration cap before the off-diagonal
    /// rotations fell below tolerance.
    #[error("SVD did not converge within {sweeps} sweeps")]
    SvdConvergence { sweeps: usize },

    /// The symmetric eigensolver hit its iteration cap.
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigenConvergence { sweeps: usize },

    /// A traversal or optimization step produced a non-finite update.
    #[error("numeric failure at iteration {iter}: {reason}")]
    Numeric { iter: usize, reason: String },

    /// Every direction of a local frame fell at or below the singular-value
    /// threshold, so no reliable motion is possible.
    #[error("degenerate frame: all singular values at or below threshold {threshold}")]
    DegenerateFrame { threshold: f64 },

    /// File access failed; carries the path for context.
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
