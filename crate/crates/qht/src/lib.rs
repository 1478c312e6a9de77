//! Finite-blocklength quantum hypothesis testing.
//!
//! This crate computes, at finite blocklength `n`, the objects that drive
//! asymmetric quantum hypothesis testing between a null source and an
//! alternative:
//!
//! * validated dense operator types ([`operator::HermitianOperator`],
//!   [`operator::DensityMatrix`], [`operator::TestOperator`]) with spectral
//!   projections, operator logarithms, tensor powers, and the pinching map;
//! * the exact optimal type-II error `β_ε(ρ‖σ)` for a single alternative,
//!   with boundary randomization and a Lagrangian dual certificate
//!   ([`np::optimal_beta`]);
//! * minimax testing against finitely generated convex alternative sets
//!   ([`composite::composite_beta`]) and finite-`n` regularized divergence
//!   series;
//! * rate-indexed spectral tests and finite-`n` spectral inf-divergence
//!   estimates ([`spectrum`]), including the combined mixed-source test and
//!   the pinching-reduction comparison;
//! * mixed sources `ρ_n = Σ_i p_i ρ̄_i^{⊗n}` and the ε-step exponent formula
//!   with its jump demonstration ([`mixed`]);
//! * an exact classical type-class oracle in log-domain arithmetic for
//!   commuting fixtures at blocklengths in the thousands ([`classical`]);
//! * a seeded randomized property battery binding the inequality-level
//!   claims to runnable checks ([`verify`]).
//!
//! All entropies and rates are in nats (natural logarithm).
//!
//! ```
//! use qht::operator::DensityMatrix;
//! use qht::np::{optimal_beta, relative_entropy};
//!
//! let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
//! let sigma = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
//!
//! // Optimal type-II error at type-I budget 0.25.
//! let result = optimal_beta(&rho, &sigma, 0.25).unwrap();
//! assert!(result.beta > 0.0 && result.beta < 1.0);
//! assert!(result.alpha_achieved <= 0.25 + 1e-9);
//!
//! // Strong duality: the dual certificate matches the primal value.
//! assert!((result.beta - result.dual_value).abs() < 1e-7);
//!
//! // Relative entropy in nats.
//! let d = relative_entropy(&rho, &sigma).unwrap();
//! assert!(d > 0.0 && d.is_finite());
//! ```

pub mod classical;
pub mod composite;
pub mod error;
pub mod mixed;
pub mod np;
pub mod operator;
pub mod spectrum;
pub mod verify;

pub use error::{QhtError, Result};

/// Default cap on operator dimension for dense storage.
pub const DEFAULT_MAX_DIM: usize = 4096;

#[cfg(doctest)]
mod book {
    // Keeps the guide's code blocks compiling: every ```rust fence in the
    // book runs under `cargo test --doc`.
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/neyman_pearson.md")]
    mod neyman_pearson {}
    #[doc = include_str!("../../../book/src/information_spectrum.md")]
    mod information_spectrum {}
    #[doc = include_str!("../../../book/src/mixed_sources.md")]
    mod mixed_sources {}
    #[doc = include_str!("../../../book/src/classical_oracle.md")]
    mod classical_oracle {}
    #[doc = include_str!("../../../book/src/composite.md")]
    mod composite {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
