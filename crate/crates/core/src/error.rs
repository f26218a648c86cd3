use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::concavify::ConcavifyResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug)]
pub enum Error {
    /// Vector or matrix sizes disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A probability vector is negative somewhere or does not sum to one.
    InvalidBelief(String),
    /// Signal weights or Bayes plausibility out of tolerance.
    InvalidSignal(String),
    /// Malformed input other than beliefs and signals.
    InvalidInput(String),
    /// The objective could not be evaluated at a belief.
    Evaluation(String),
    /// The mesh would exceed the configured candidate budget.
    MeshTooLarge { count: u128, limit: usize },
    /// Post-solve residual checks failed even after refactorization.
    NumericFailure(String),
    /// An LP that must be feasible was not.
    Infeasible(String),
    /// An LP that must be bounded was not.
    Unbounded(String),
    /// A moment point outside the convex hull of the state moments.
    OutOfHull,
    /// The cutting-plane loop ran out of iterations; carries the best bundle so far.
    IterationLimit(Box<ConcavifyResult>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidBelief(m) => write!(f, "invalid belief: {m}"),
            Error::InvalidSignal(m) => write!(f, "invalid signal: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Evaluation(m) => write!(f, "objective evaluation failed: {m}"),
            Error::MeshTooLarge { count, limit } => {
                write!(f, "simplex mesh has {count} points, limit is {limit}")
            }
            Error::NumericFailure(m) => write!(f, "numeric failure: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Unbounded(m) => write!(f, "unbounded: {m}"),
            Error::OutOfHull => f.write_str("moment point lies outside the moment hull"),
            Error::IterationLimit(best) => write!(
                f,
                "iteration limit reached after {} iterations (best value {})",
                best.iterations, best.value
            ),
        }
    }
}

impl core::error::Error for Error {}
