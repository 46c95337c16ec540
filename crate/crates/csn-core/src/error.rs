use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the coupled-network pipeline.
#[derive(Debug, Error)]
pub enum CsnError {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid edge ({from}, {to}): {message}")]
    InvalidEdge { from: u64, to: u64, message: String },

    #[error("purification removed every node; thresholds too strict for this input")]
    EmptyPurifyResult,

    #[error("split ratio must be strictly between 0 and 1, got {0}")]
    RatioOutOfRange(f64),

    #[error("operation requires a non-empty network")]
    EmptyNetwork,

    #[error("random walk failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("user {user} has no out-links; run purification before computing walk influence")]
    DanglingUser { user: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("no user in the test set has an eligible negative item to sample")]
    NoEligibleNegative,

    #[error("no user pair has positive influence")]
    NoPositiveInfluencePairs,

    #[error("no successfully recommended items in this run")]
    NoRecoveredItems,
}

pub type Result<T> = std::result::Result<T, CsnError>;
