use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum SrotError {
    /// Invalid problem data or solver configuration (dimension mismatches,
    /// out-of-range parameters, inconsistent option combinations).
    #[error("configuration error: {0}")]
    Config(String),

    /// A feasibility constraint would be violated by the requested update.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// Index outside the problem dimensions.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Non-finite or otherwise unusable numeric input.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The solver produced a non-finite objective. The partial trace is kept
    /// so the failure can be inspected.
    #[error("numeric divergence at epoch {epoch}")]
    Divergence {
        epoch: usize,
        trace: Box<crate::metrics::SolverTrace>,
    },

    /// An internal invariant failed (e.g. the transportation simplex exceeded
    /// its cycling guard). These indicate bugs, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    /// I/O or parse failure for an external file format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SrotError>;
