//! Crate-wide error type.

use core::fmt;

/// Failure modes of the numeric routines.
///
/// In-band outcomes that the analysis is expected to handle (a cell that never
/// flips, an unsettled transient, a fit that stops at its iteration cap) are
/// reported through result structs, not through this type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An iterative solver exhausted its iteration budget.
    NoConvergence(&'static str),
    /// An operation over a collection was given no elements.
    EmptySet,
    /// Two collections that must have equal lengths do not.
    SizeMismatch { left: usize, right: usize },
    /// A histogram or search range has zero or negative width.
    DegenerateRange,
    /// A requested probability is at or above the model supremum.
    Unreachable { requested: f64, supremum: f64 },
    /// A parameter violates a documented invariant.
    InvalidParameter(&'static str),
    /// Fewer data points than the operation requires.
    InsufficientData { needed: usize, got: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NoConvergence(what) => write!(f, "no convergence: {what}"),
            Error::EmptySet => write!(f, "empty input set"),
            Error::SizeMismatch { left, right } => {
                write!(f, "size mismatch: {left} vs {right}")
            }
            Error::DegenerateRange => write!(f, "degenerate range"),
            Error::Unreachable { requested, supremum } => {
                write!(f, "probability {requested} unreachable (supremum {supremum})")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need {needed}, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}
