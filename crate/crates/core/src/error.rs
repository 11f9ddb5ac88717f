use thiserror::Error;

use crate::dyadic::DyadicInterval;

#[derive(Debug, Error)]
pub enum Error {
    #[error("depth mismatch: expected {expected}, found {found}")]
    DepthMismatch { expected: usize, found: usize },

    #[error("depth {0} exceeds the supported maximum")]
    DepthTooLarge(usize),

    #[error("interval {0} lies below the truncation depth {1}")]
    BelowTruncation(DyadicInterval, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("entry at {0} is nonzero outside the stopping set")]
    OutsideStoppingSet(DyadicInterval),

    #[error("stopping set is empty")]
    EmptyStoppingSet,

    #[error("no scalar reduction below the requested error; best {best} at {at}")]
    NotFound { best: String, at: DyadicInterval },

    #[error("host depth exhausted: {0}")]
    HostDepthExhausted(String),

    #[error("budget shortfall: {0}")]
    BudgetShortfall(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("dense representation too large: {0} entries")]
    TooLarge(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
