use thiserror::Error;

/// Errors raised while constructing systems or evaluating maps on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix [[{0}, {1}], [{2}, {3}]] is not unimodular (|det| != 1)")]
    NotUnimodular(i64, i64, i64, i64),

    #[error("matrix has |trace| = {0} <= 2, so it is not hyperbolic")]
    NotHyperbolic(i64),

    #[error("invalid ceiling function: {0}")]
    InvalidCeiling(String),

    #[error("base conjugacy is not declared differentiable")]
    NotDifferentiable,

    #[error("base conjugacy has no declared inverse")]
    NotInvertible,

    #[error("base conjugacy fails g∘h = h∘f: residual {residual:e} at ({x1}, {x2})")]
    ConjugacyMismatch { residual: f64, x1: f64, x2: f64 },

    #[error("invalid bump specification: {0}")]
    InvalidBump(String),

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tolerance: f64 },

    #[error("fiber reparametrization at ({x1}, {x2}) is not monotone: min derivative {min_derivative:e}")]
    MonotonicityViolation { x1: f64, x2: f64, min_derivative: f64 },

    #[error("argument {value} outside the domain [0, {upper}]")]
    OutOfDomain { value: f64, upper: f64 },

    #[error("point lies on the cross section (height 0); the fiber formula does not apply")]
    OnSection,

    #[error("finite-difference step {step:e} leaves the admissible region")]
    StepTooLarge { step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
