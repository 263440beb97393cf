//! Error type shared by all modules.

/// Errors reported by model construction, tightening, and solving.
///
/// Parameter and dimension problems are caught eagerly at construction;
/// domain and assumption violations surface from the operations that need
/// them. All variants are `Clone + PartialEq` so tests can match exactly.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} must satisfy: {requirement} (got {value})")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} outside domain (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("assumption violated: {what}")]
    AssumptionViolated { what: &'static str },

    #[error("{what} did not converge within {limit} iterations")]
    IterationLimit { what: &'static str, limit: usize },

    #[error("numerical failure in {what}: {detail}")]
    Numerical {
        what: &'static str,
        detail: &'static str,
    },
}
