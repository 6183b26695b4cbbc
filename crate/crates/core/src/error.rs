use thiserror::Error;

use crate::transform::Normalization;

/// Errors produced by the analysis and synthesis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array or block dimensions are inconsistent.
    #[error("shape error: {0}")]
    Shape(String),

    /// The coefficient container is in the wrong normalization for the requested statistic.
    #[error("normalization guard: expected {expected} coefficients, found {found}")]
    Normalization {
        expected: Normalization,
        found: Normalization,
    },

    /// Not enough usable scales or nonzero statistics to estimate an exponent.
    #[error("estimation degenerate: {0}")]
    Degenerate(String),

    /// An oracle would exceed its cost guard.
    #[error("cost guard: {0}")]
    CostGuard(String),

    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
