use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error(
        "quadrature did not converge after {panels} panels: estimate log={log_estimate}, \
         achieved relative tolerance {achieved_tol:e}"
    )]
    QuadratureNonConvergence {
        log_estimate: f64,
        achieved_tol: f64,
        panels: usize,
    },

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("duplicate point: neighbor {neighbor} of query coincides with it (zero distance)")]
    DuplicatePoint { neighbor: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged (non-finite loss) at epoch {epoch}; last finite epoch: {last_finite_epoch:?}")]
    Divergence {
        epoch: usize,
        last_finite_epoch: Option<usize>,
    },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
