use thiserror::Error;

/// Errors raised by set queries, partition evaluation, extension assembly
/// and the certification estimators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A query that is only defined off the closed set was made at a point of it.
    #[error("query point lies in the closed set")]
    OnSet,

    /// A point required to lie in the closed set does not.
    #[error("point {0:?} does not lie in the closed set")]
    NotInSet(Vec<f64>),

    /// Query beyond the validity shell of a truncated scale ladder.
    #[error("query at distance {distance} is outside the validity shell (distance < {limit})")]
    OutsideValidity { distance: f64, limit: f64 },

    #[error("no external table entry for point {0:?}")]
    LookupMiss(Vec<f64>),

    #[error("no jet attached to set point {0:?}")]
    MissingJet(Vec<f64>),

    /// A numerically certified property failed its tolerance.
    #[error("property violation: {0}")]
    PropertyViolation(String),

    /// The paratingent directions found do not span the space.
    #[error("paratingent directions do not span R^{0}; the strict derivative is not determined uniquely")]
    DegenerateCone(usize),

    /// The query is so close to the set, relative to its coordinates, that
    /// the dyadic cubes reaching it cannot be represented in floating point.
    #[error("point {0:?} is too close to the set for the dyadic grid to resolve")]
    BelowResolution(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
