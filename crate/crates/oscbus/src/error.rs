use thiserror::Error;

/// Errors surfaced by the oscillator-bus engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or vector has a dimension incompatible with the phase-space layout.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A scalar or structural argument violates its documented constraint.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input matrix fails a structural requirement (symmetry, symplecticity, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Hessian that must be positive definite is not; carries the offending eigenvalue.
    #[error("matrix is not positive definite (offending eigenvalue {eigenvalue:.6e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    /// The drift matrix is not Hurwitz, so no unique steady state exists.
    #[error("no steady state: drift is not Hurwitz, offending eigenvalue real parts {0:?}")]
    NoSteadyState(Vec<f64>),

    /// Mode-space bath structure is not local, so the effective reduction is invalid.
    #[error("structural violation: {0}")]
    StructuralViolation(String),

    /// The requested closed-form path does not exist for this topology.
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    /// A covariance matrix or derived observable is unphysical.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
