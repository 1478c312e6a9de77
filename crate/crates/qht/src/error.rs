//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QhtError {
    #[error("matrix is not Hermitian: max |M - M†| = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{tol:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tol: f64 },

    #[error("trace {trace:.6e} cannot be normalized to 1")]
    BadTrace { trace: f64 },

    #[error("test operator spectrum [{min:.3e}, {max:.3e}] outside [0, 1] beyond tolerance")]
    NotATest { min: f64, max: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension overflow: {dim}^{power} exceeds cap {max_dim}")]
    DimensionOverflow { dim: usize, power: u32, max_dim: usize },

    #[error("combinatorial overflow: {count} generators exceed cap {cap}")]
    GeneratorOverflow { count: usize, cap: usize },

    #[error(
        "eigensolver failed: dim {dim}, max |entry| {max_abs:.3e}, \
         reconstruction residual {residual:.3e} (tolerance {tol:.3e})"
    )]
    EigFailure { dim: usize, max_abs: f64, residual: f64, tol: f64 },

    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),

    #[error("epsilon {0} must be below 1 for the step exponent")]
    EpsilonAtOne(f64),

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("states do not commute (max |[rho,sigma]| = {commutator:.3e}); pinch first")]
    NonCommuting { commutator: f64 },

    #[error(
        "threshold exponent n*a = {na:.1} too large for non-commuting inputs in floating point \
         (cap 300); pinch to a commuting pair first"
    )]
    RateOverflow { na: f64 },

    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("blocklength mismatch: {left} vs {right}")]
    BlocklengthMismatch { left: usize, right: usize },

    #[error("unknown property id: {0}")]
    UnknownProperty(String),

    #[error("property registry is empty")]
    EmptyRegistry,

    #[error("support of rho not covered by any generator mixture")]
    SupportDeficient,

    #[error("invalid JSON payload: {0}")]
    BadJson(String),
}

pub type Result<T> = std::result::Result<T, QhtError>;
