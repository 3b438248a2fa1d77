use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input: missing columns, invalid config, bad parameters.
    #[error("input format error: {0}")]
    Format(String),

    /// Not enough data to run the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Geometric degeneracy (collinear points, polar latitudes, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal invariant failed. Always a bug, never silent.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A size guard tripped before an oversized computation started.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// A distribution fit did not converge; the family is excluded from
    /// ranking and reported as failed.
    #[error("fit failure ({family}): {reason}")]
    FitFailure { family: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
