//! Exact optimal type-II error for a single alternative: the quantum
//! Neyman–Pearson test with randomized boundary, quantum relative entropy,
//! and the Lagrangian dual certificate.
//!
//! The optimal test for `min Tr[Tσ]` subject to `Tr[(I−T)ρ] ≤ ε` and
//! `0 ≤ T ≤ I` has threshold form `T = {ρ − tσ > 0} + γ·Π₀(t)`, where
//! `Π₀(t)` projects onto the kernel of `ρ − tσ` and `γ ∈ [0, 1]` tunes the
//! type-I error onto the budget exactly. [`optimal_beta`] locates the
//! threshold by bisection and certifies the value against the concave dual
//! `μ ↦ μ(1−ε) − Tr[(μρ − σ)_+]`.

use serde::Serialize;

use crate::error::{QhtError, Result};
use crate::operator::{
    eigenvalues_only, matrix_log_on_support, pinch, positive_part_trace, sign_split,
    support_projection, trace_product, DensityMatrix, HermitianOperator, SignSplit, TestOperator,
    PSD_TOL,
};

/// Feasibility slack absorbing trace rounding in `α ≤ ε` comparisons.
const FEAS_SLACK: f64 = 1e-12;

/// Result of the optimal Neyman–Pearson problem at type-I budget `ε`.
#[derive(Clone, Debug)]
pub struct NPResult {
    /// Optimal type-II error `β_ε(ρ‖σ)`.
    pub beta: f64,
    /// Threshold `t` of the optimal test `{ρ − tσ > 0} + γ Π₀(t)`.
    pub threshold_t: f64,
    /// Boundary randomization weight.
    pub gamma: f64,
    /// The optimal test operator.
    pub test: TestOperator,
    /// Type-I error of the returned test (`≤ ε + 1e-9`).
    pub alpha_achieved: f64,
    /// Value of the Lagrangian dual (certifies `beta` from below).
    pub dual_value: f64,
    /// Maximizing dual variable.
    pub dual_mu: f64,
    /// `|alpha_achieved − ε|` when the bisection stalled before matching ε;
    /// zero on the regular path.
    pub bisection_residual: f64,
}

/// Flat scalar record for CLI output.
#[derive(Clone, Debug, Serialize)]
pub struct NPSummary {
    pub epsilon: f64,
    pub beta: f64,
    pub threshold_t: f64,
    pub gamma: f64,
    pub alpha_achieved: f64,
    pub dual_value: f64,
    pub dual_mu: f64,
}

impl NPResult {
    pub fn summary(&self, epsilon: f64) -> NPSummary {
        NPSummary {
            epsilon,
            beta: self.beta,
            threshold_t: self.threshold_t,
            gamma: self.gamma,
            alpha_achieved: self.alpha_achieved,
            dual_value: self.dual_value,
            dual_mu: self.dual_mu,
        }
    }
}

/// Umegaki relative entropy `D(ρ‖σ) = Tr[ρ(log ρ − log σ)]` in nats;
/// `+∞` when the support of `ρ` leaks outside the support of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    let supp = support_projection(sigma)?;
    let outside = 1.0 - trace_product(supp.op(), rho.op());
    if outside > 1e-9 {
        return Ok(f64::INFINITY);
    }
    let log_rho = matrix_log_on_support(rho)?;
    let log_sigma = matrix_log_on_support(sigma)?;
    Ok(trace_product(rho.op(), &log_rho) - trace_product(rho.op(), &log_sigma))
}

/// Type-I and type-II errors of a test: `α = Tr[(I−T)ρ]`, `β = Tr[Tσ]`,
/// both clipped into `[0, 1]`.
pub fn type_errors(
    test: &TestOperator,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<(f64, f64)> {
    if test.dim() != rho.dim() {
        return Err(QhtError::DimensionMismatch { left: test.dim(), right: rho.dim() });
    }
    if rho.dim() != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    let alpha = (1.0 - trace_product(test.op(), rho.op())).clamp(0.0, 1.0);
    let beta = trace_product(test.op(), sigma.op()).clamp(0.0, 1.0);
    Ok((alpha, beta))
}

struct Candidate {
    t: f64,
    split: SignSplit,
    /// α of the strict test {ρ − tσ > 0}.
    alpha_strict: f64,
    /// α of the closed test {ρ − tσ ≥ 0}.
    alpha_wide: f64,
    kernel_rho: f64,
    kernel_sigma: f64,
    beta_strict: f64,
}

fn evaluate(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    t: f64,
    zero_tol: Option<f64>,
) -> Result<Candidate> {
    let m = HermitianOperator::lin_comb(1.0, rho.op(), -t, sigma.op())?;
    let split = sign_split(&m, zero_tol)?;
    let pos_rho = trace_product(split.strict_pos.op(), rho.op());
    let kernel_rho = trace_product(split.kernel.op(), rho.op()).max(0.0);
    let kernel_sigma = trace_product(split.kernel.op(), sigma.op()).max(0.0);
    let beta_strict = trace_product(split.strict_pos.op(), sigma.op()).clamp(0.0, 1.0);
    let alpha_strict = (1.0 - pos_rho).clamp(0.0, 1.0);
    let alpha_wide = (alpha_strict - kernel_rho).clamp(0.0, 1.0);
    Ok(Candidate { t, split, alpha_strict, alpha_wide, kernel_rho, kernel_sigma, beta_strict })
}

fn finish(c: &Candidate, epsilon: f64, residual: f64) -> (TestOperator, f64, f64, f64, f64) {
    // Pick γ so the achieved type-I error sits on the budget; accepting kernel
    // σ-mass is never free, so γ stays at zero when the strict test already fits.
    let gamma = if c.alpha_strict <= epsilon + FEAS_SLACK {
        0.0
    } else if c.kernel_rho > 0.0 {
        ((c.alpha_strict - epsilon) / c.kernel_rho).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let op = HermitianOperator::lin_comb(1.0, c.split.strict_pos.op(), gamma, c.split.kernel.op())
        .expect("same dim");
    let test = TestOperator::trusted(op);
    let alpha = (c.alpha_strict - gamma * c.kernel_rho).clamp(0.0, 1.0);
    let beta = (c.beta_strict + gamma * c.kernel_sigma).clamp(0.0, 1.0);
    (test, alpha, beta, gamma, residual)
}

/// Optimal ε-achievable type-II error `β_ε(ρ‖σ)` with the attaining test.
///
/// Bisects the threshold over `[0, t_max]` with
/// `t_max = λ_max(ρ)/λ_min^{>0}(σ) + 1`, monitoring the closed and strict
/// spectral tests; at the bracketing threshold the boundary weight γ is set so
/// the achieved type-I error equals ε whenever the kernel carries ρ-mass.
/// Degenerate thresholds (all crossings at one point, e.g. `ρ = σ`) are
/// resolved by widening the kernel classification to the bracket width, which
/// is an upper bound for the eigenvalue drift since `‖σ‖ ≤ 1`.
pub fn optimal_beta(rho: &DensityMatrix, sigma: &DensityMatrix, epsilon: f64) -> Result<NPResult> {
    if rho.dim() != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(QhtError::BadEpsilon(epsilon));
    }
    let dim = rho.dim();

    let sigma_evs = eigenvalues_only(sigma.op());
    let min_nonzero = sigma_evs
        .iter()
        .cloned()
        .filter(|&l| l > PSD_TOL)
        .fold(f64::INFINITY, f64::min);
    let rho_max = eigenvalues_only(rho.op()).last().cloned().unwrap_or(0.0);
    let t_max = rho_max / min_nonzero + 1.0;

    if epsilon >= 1.0 {
        let (dual_value, dual_mu) = dual_maximize(rho, sigma, epsilon, t_max, t_max);
        return Ok(NPResult {
            beta: 0.0,
            threshold_t: t_max,
            gamma: 0.0,
            test: TestOperator::zero(dim),
            alpha_achieved: 1.0,
            dual_value,
            dual_mu,
            bisection_residual: 0.0,
        });
    }

    let build = |c: &Candidate, residual: f64| -> Result<NPResult> {
        let (test, alpha, beta, gamma, residual) = finish(c, epsilon, residual);
        let (dual_value, dual_mu) = dual_maximize(rho, sigma, epsilon, c.t, t_max);
        Ok(NPResult {
            beta,
            threshold_t: c.t,
            gamma,
            test,
            alpha_achieved: alpha,
            dual_value,
            dual_mu,
            bisection_residual: residual,
        })
    };

    // If even the endpoint test fits the budget, σ has a kernel soaking up the
    // acceptance; β is already minimal there.
    let c_end = evaluate(rho, sigma, t_max, None)?;
    if c_end.alpha_wide <= epsilon + FEAS_SLACK {
        return build(&c_end, 0.0);
    }

    let mut lo = 0.0f64;
    let mut hi = t_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c = evaluate(rho, sigma, mid, None)?;
        if c.alpha_wide > epsilon + FEAS_SLACK {
            hi = mid;
        } else if c.alpha_strict >= epsilon - FEAS_SLACK {
            return build(&c, 0.0);
        } else {
            lo = mid;
        }
    }

    // Stalled between adjacent thresholds: classify eigenvalues that flip sign
    // across [lo, hi] as kernel. ‖σ‖ ≤ 1 bounds their magnitude by the width.
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);
    let c = evaluate(rho, sigma, mid, Some(2.0 * width))?;
    if c.alpha_wide <= epsilon + FEAS_SLACK && c.alpha_strict >= epsilon - FEAS_SLACK {
        return build(&c, 0.0);
    }
    // Last resort: report the feasible endpoint with its residual.
    let c = evaluate(rho, sigma, lo, None)?;
    let residual = (c.alpha_wide - epsilon).abs();
    build(&c, residual)
}

/// Maximizes the concave dual `g(μ) = μ(1−ε) − Tr[(μρ − σ)_+]` over `μ ≥ 0`.
///
/// The maximizer sits at `μ* = 1/t*` for the primal threshold `t*`, which can
/// exceed the primal search range, so the bracket is grown until `g` bends over.
fn dual_maximize(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    epsilon: f64,
    t_star: f64,
    t_max: f64,
) -> (f64, f64) {
    let g = |mu: f64| -> f64 {
        let m = HermitianOperator::lin_comb(mu, rho.op(), -1.0, sigma.op()).expect("same dim");
        mu * (1.0 - epsilon) - positive_part_trace(&m)
    };

    let mut hi = t_max.max(2.0 / t_star.max(1e-9)).max(1.0);
    for _ in 0..60 {
        if g(hi) <= g(hi * 0.99) + 1e-15 {
            break;
        }
        hi *= 4.0;
    }

    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (0.0f64, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..200 {
        if b - a < 1e-14 * hi.max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
        }
    }
    let mut best_mu = 0.5 * (a + b);
    let mut best = g(best_mu);
    // The kink maximizer 1/t* is exact when the dual is piecewise linear.
    for candidate in [1.0 / t_star.max(1e-300), t_star, 0.0] {
        if candidate.is_finite() && candidate >= 0.0 {
            let v = g(candidate);
            if v > best {
                best = v;
                best_mu = candidate;
            }
        }
    }
    (best, best_mu)
}

/// `β_ε` before and after pinching `ρ` by `σ` (data-processing comparison):
/// returns `(beta_orig, beta_pinched)` with `beta_orig ≤ beta_pinched + 1e-9`.
pub fn beta_under_cptp_pinching(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let orig = optimal_beta(rho, sigma, epsilon)?;
    let (pinched, _) = pinch(rho, sigma)?;
    let after = optimal_beta(&pinched, sigma, epsilon)?;
    Ok((orig.beta, after.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{random_density, random_test};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn relative_entropy_examples() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_relative_eq!(
            relative_entropy(&pure, &mixed).unwrap(),
            2.0f64.ln(),
            max_relative = 1e-12
        );

        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let rho = random_density(&mut rng, 3);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() <= 1e-9);

        let a = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let b = DensityMatrix::from_diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let expected = 0.5 * (1.5f64).ln() + 0.5 * (0.75f64).ln();
        assert_relative_eq!(relative_entropy(&a, &b).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn relative_entropy_infinite_outside_support() {
        let rho = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(relative_entropy(&rho, &sigma).unwrap().is_infinite());
    }

    #[test]
    fn type_errors_examples() {
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        let (a, b) = type_errors(&TestOperator::identity(2), &rho, &sigma).unwrap();
        assert_eq!((a, b), (0.0, 1.0));
        let (a, b) = type_errors(&TestOperator::zero(2), &rho, &sigma).unwrap();
        assert_eq!((a, b), (1.0, 0.0));
        let t = TestOperator::new(HermitianOperator::from_real_diagonal(&[1.0, 0.0])).unwrap();
        let (a, b) = type_errors(&t, &rho, &sigma).unwrap();
        assert_relative_eq!(a, 0.1, max_relative = 1e-12);
        assert_relative_eq!(b, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn optimal_beta_identical_pair_is_one_minus_eps() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 3);
            for eps in [0.0, 0.25, 0.5, 0.9] {
                let r = optimal_beta(&rho, &rho, eps).unwrap();
                assert!(
                    (r.beta - (1.0 - eps)).abs() <= 1e-8,
                    "eps={eps}: beta={} expected {}",
                    r.beta,
                    1.0 - eps
                );
                assert!(r.alpha_achieved <= eps + 1e-9);
            }
        }
    }

    #[test]
    fn optimal_beta_support_test_at_zero_eps() {
        let rho = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        let r = optimal_beta(&rho, &sigma, 0.0).unwrap();
        assert_relative_eq!(r.beta, 0.5, max_relative = 1e-9);
        assert!(r.alpha_achieved <= 1e-9);
    }

    #[test]
    fn optimal_beta_two_outcome_classical() {
        let rho = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let r = optimal_beta(&rho, &sigma, 0.5).unwrap();
        assert_relative_eq!(r.beta, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn optimal_beta_epsilon_one_degenerate() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        let r = optimal_beta(&rho, &sigma, 1.0).unwrap();
        assert_eq!(r.beta, 0.0);
        assert_eq!(r.test.op().max_abs(), 0.0);
        assert!((r.dual_value - 0.0).abs() <= 1e-12);
    }

    #[test]
    fn optimal_beta_monotone_in_epsilon() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 2);
            let sigma = random_density(&mut rng, 2);
            let mut last = f64::INFINITY;
            for eps in [0.0, 0.1, 0.3, 0.5, 0.7, 0.95] {
                let r = optimal_beta(&rho, &sigma, eps).unwrap();
                assert!(r.beta <= last + 1e-9);
                last = r.beta;
            }
        }
    }

    #[test]
    fn optimal_beta_feasible_and_dual_certified() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..20 {
            let d = if rng.gen_bool(0.5) { 2 } else { 3 };
            let rho = random_density(&mut rng, d);
            let sigma = random_density(&mut rng, d);
            let eps: f64 = rng.gen_range(0.0..1.0);
            let r = optimal_beta(&rho, &sigma, eps).unwrap();
            assert!(r.alpha_achieved <= eps + 1e-9);
            let gap = r.beta - r.dual_value;
            assert!(
                (-1e-9..=1e-7).contains(&gap),
                "duality gap {gap} outside [-1e-9, 1e-7]"
            );
            let evs = eigenvalues_only(r.test.op());
            assert!(evs[0] >= -1e-9 && evs[evs.len() - 1] <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn optimal_beta_sampled_optimality() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let eps = 0.3;
        let r = optimal_beta(&rho, &sigma, eps).unwrap();
        let mut checked = 0;
        while checked < 200 {
            // Random feasible test: clip a random Hermitian into [0, I], then
            // mix toward I until the type-I constraint holds.
            let t = random_test(&mut rng, 2);
            let (alpha, _) = type_errors(&t, &rho, &sigma).unwrap();
            let t = if alpha > eps {
                let w = eps / alpha;
                let id = TestOperator::identity(2);
                let op =
                    HermitianOperator::lin_comb(w, t.op(), 1.0 - w, id.op()).unwrap();
                TestOperator::trusted(op)
            } else {
                t
            };
            let (alpha, beta) = type_errors(&t, &rho, &sigma).unwrap();
            if alpha <= eps + 1e-9 {
                assert!(beta >= r.beta - 1e-9, "sampled test beats optimum");
                checked += 1;
            }
        }
    }

    #[test]
    fn pinching_data_processing_direction() {
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 2);
            let sigma = random_density(&mut rng, 2);
            let (orig, pinched) = beta_under_cptp_pinching(&rho, &sigma, 0.3).unwrap();
            assert!(orig <= pinched + 1e-9);
        }
        // Commuting pairs: pinching is the identity.
        let rho = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
        let (orig, pinched) = beta_under_cptp_pinching(&rho, &sigma, 0.3).unwrap();
        assert!((orig - pinched).abs() <= 1e-9);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(optimal_beta(&rho, &rho, -0.1), Err(QhtError::BadEpsilon(_))));
        assert!(matches!(optimal_beta(&rho, &rho, 1.1), Err(QhtError::BadEpsilon(_))));
    }
}
