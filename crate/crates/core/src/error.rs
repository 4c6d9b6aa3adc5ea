use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument lies outside the range where the result is representable.
    #[error("argument out of range: {0}")]
    OutOfRange(String),

    /// The function has a pole at the requested point.
    #[error("pole: {0}")]
    Pole(String),

    /// Inputs violate a precondition of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The seed value at large positive x underflowed.
    #[error("seed underflow at x0 = {x0}: |q| = {q:e}")]
    SeedUnderflow { x0: f64, q: f64 },

    /// Adaptive step size collapsed without a recognisable pole.
    #[error("step size collapsed at x = {x} (h = {h:e})")]
    StepCollapse { x: f64, h: f64 },

    /// A singularity was met that is not a simple pole of residue +1 or -1.
    #[error("irregular singularity near x = {x}: {detail}")]
    IrregularPole { x: f64, detail: String },

    /// An iterative method did not reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The Nystrom determinant came out non-positive.
    #[error("non-positive determinant {det:e} at x = {x}: operator norm reached 1/gamma")]
    NonPositiveDeterminant { x: f64, det: f64 },

    /// Evaluation too close to a singularity of an asymptotic formula.
    #[error("singular denominator at x = {x}: |2 cos(phi) + 1| = {denominator:e}")]
    SingularDenominator { x: f64, denominator: f64 },

    /// Writing serialized output failed.
    #[error("output error: {0}")]
    Output(String),

    /// A consistency assertion failed (e.g. an expected-real quantity had an imaginary part).
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
