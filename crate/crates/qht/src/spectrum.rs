//! Finite-`n` spectral inf-divergence machinery: rate-indexed spectral tests,
//! sweep-based estimation of the largest ε-feasible rate, the combined
//! mixed-source test, and the pinching-reduction comparison.
//!
//! The spectral test at rate `a` is the projection `{ρ_n − e^{na}σ_n ≥ 0}`.
//! Its type-II error obeys `β ≤ e^{−na}` unconditionally, so sweeping `a`
//! against the type-I budget `ε` yields a finite-`n` proxy for the spectral
//! inf-divergence rate. Exponentials stay in floating point while
//! `n·a ≤ 300`; diagonal (commuting) inputs run entirely in log domain at
//! any rate, and non-commuting inputs beyond the float range are refused.

use serde::Serialize;

use crate::classical::log_sum_exp;
use crate::error::{QhtError, Result};
use crate::mixed::MixedSourceSpec;
use crate::np::optimal_beta;
use crate::operator::{
    pinch, positive_part_projection, tensor_power, trace_product, DensityMatrix,
    HermitianOperator, TestOperator,
};

/// Rate beyond which `e^{na}` is not formed in floating point.
const FLOAT_RATE_CAP: f64 = 300.0;

enum ThresholdTest {
    Diagonal { test: TestOperator, accept: Vec<bool> },
    Dense { test: TestOperator },
}

impl ThresholdTest {
    fn test(&self) -> &TestOperator {
        match self {
            ThresholdTest::Diagonal { test, .. } => test,
            ThresholdTest::Dense { test } => test,
        }
    }
}

/// `{ρ − e^{na}σ ≥ 0}` with log-domain comparison for diagonal pairs.
fn threshold_test(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    na: f64,
) -> Result<ThresholdTest> {
    if rho.dim() != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    if rho.is_diagonal() && sigma.is_diagonal() {
        let p = rho.op().diagonal_real();
        let q = sigma.op().diagonal_real();
        let accept: Vec<bool> = p
            .iter()
            .zip(q.iter())
            .map(|(&pi, &qi)| {
                if qi <= 0.0 {
                    true // ρ − e^{na}·0 = ρ ≥ 0 on this axis
                } else if pi <= 0.0 {
                    false
                } else {
                    pi.ln() >= na + qi.ln()
                }
            })
            .collect();
        let diag: Vec<f64> = accept.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let test = TestOperator::trusted(HermitianOperator::from_real_diagonal(&diag));
        return Ok(ThresholdTest::Diagonal { test, accept });
    }
    if na > FLOAT_RATE_CAP {
        return Err(QhtError::RateOverflow { na });
    }
    let m = HermitianOperator::lin_comb(1.0, rho.op(), -na.exp(), sigma.op())?;
    let test = positive_part_projection(&m)?;
    Ok(ThresholdTest::Dense { test })
}

/// `(α, log β)` of a threshold test against `(ρ, σ)`; β in log domain on the
/// diagonal path.
fn threshold_errors(
    tt: &ThresholdTest,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> (f64, f64) {
    match tt {
        ThresholdTest::Diagonal { accept, .. } => {
            let p = rho.op().diagonal_real();
            let q = sigma.op().diagonal_real();
            let accepted_p: f64 =
                accept.iter().zip(p.iter()).filter(|(&a, _)| a).map(|(_, &v)| v).sum();
            let logs: Vec<f64> = accept
                .iter()
                .zip(q.iter())
                .filter(|(&a, &v)| a && v > 0.0)
                .map(|(_, &v)| v.ln())
                .collect();
            ((1.0 - accepted_p).clamp(0.0, 1.0), log_sum_exp(&logs))
        }
        ThresholdTest::Dense { test } => {
            let alpha = (1.0 - trace_product(test.op(), rho.op())).clamp(0.0, 1.0);
            let beta = trace_product(test.op(), sigma.op()).clamp(0.0, 1.0);
            (alpha, beta.ln())
        }
    }
}

/// Verifies `β ≤ e^{−na}` within 1e-9 relative slack; float-path values below
/// the trace noise floor pass vacuously.
fn check_beta_exponent_guarantee(log_beta: f64, na: f64, dim: usize, dense: bool) -> Result<()> {
    let slack = 1e-9 * (1.0 + na.abs());
    if log_beta <= -na + slack {
        return Ok(());
    }
    if dense && log_beta.exp() <= 1e-13 * dim as f64 {
        return Ok(());
    }
    Err(QhtError::BadParameter(format!(
        "spectral test guarantee violated: log beta = {log_beta:.6e} above -na = {:.6e}",
        -na
    )))
}

/// Spectral test output at one rate point.
#[derive(Clone, Debug)]
pub struct SpectralTestResult {
    pub test: TestOperator,
    pub alpha: f64,
    pub beta: f64,
    /// `log β` computed in log domain on the diagonal path.
    pub log_beta: f64,
}

/// The rate-`a` spectral test `T = {ρ_n − e^{na}σ_n ≥ 0}` with its errors.
/// Guarantees `β ≤ e^{−na}` (checked); `α` grows with `a`.
pub fn spectral_test(
    rho_n: &DensityMatrix,
    sigma_n: &DensityMatrix,
    a: f64,
    n: u32,
) -> Result<SpectralTestResult> {
    if n == 0 {
        return Err(QhtError::BadParameter("blocklength must be positive".into()));
    }
    let na = n as f64 * a;
    let tt = threshold_test(rho_n, sigma_n, na)?;
    let (alpha, log_beta) = threshold_errors(&tt, rho_n, sigma_n);
    let dense = matches!(tt, ThresholdTest::Dense { .. });
    check_beta_exponent_guarantee(log_beta, na, rho_n.dim(), dense)?;
    Ok(SpectralTestResult { test: tt.test().clone(), alpha, beta: log_beta.exp(), log_beta })
}

/// Type-I and normalized log type-II errors along an ascending rate grid.
#[derive(Clone, Debug, Serialize)]
pub struct RateSweep {
    pub rates: Vec<f64>,
    pub type1: Vec<f64>,
    /// `(1/n) log β` per rate.
    pub type2_log: Vec<f64>,
    pub n: u32,
}

impl RateSweep {
    /// CSV with header `n,a,alpha,log_beta_per_n`, full double precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a,alpha,log_beta_per_n\n");
        for i in 0..self.rates.len() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                self.n, self.rates[i], self.type1[i], self.type2_log[i]
            ));
        }
        out
    }
}

/// Sweeps the spectral test over an ascending rate grid.
pub fn rate_sweep(
    rho_n: &DensityMatrix,
    sigma_n: &DensityMatrix,
    n: u32,
    rates: &[f64],
) -> Result<RateSweep> {
    check_ascending(rates)?;
    let mut type1 = Vec::with_capacity(rates.len());
    let mut type2_log = Vec::with_capacity(rates.len());
    for &a in rates {
        let r = spectral_test(rho_n, sigma_n, a, n)?;
        type1.push(r.alpha);
        type2_log.push(r.log_beta / n as f64);
    }
    Ok(RateSweep { rates: rates.to_vec(), type1, type2_log, n })
}

fn check_ascending(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(QhtError::Empty("rate grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QhtError::BadParameter("rate grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Default rate grid: 101 points spanning `[0, 2·d_worst]` (span `[0, 2]`
/// when the divergence is degenerate or infinite).
pub fn default_rate_grid(d_worst: f64) -> Vec<f64> {
    let top = if d_worst.is_finite() && d_worst > 0.0 { 2.0 * d_worst } else { 2.0 };
    (0..=100).map(|i| top * i as f64 / 100.0).collect()
}

/// Finite-`n` estimate of the largest ε-feasible rate.
#[derive(Clone, Debug, Serialize)]
pub struct UnderlineD {
    /// Largest rate with spectral-test type-I error within ε (bisection-refined
    /// to 1e-4 between grid points).
    pub value: f64,
    /// False when even the smallest grid rate exceeds the budget; `value` is
    /// then the grid minimum.
    pub feasible: bool,
    /// Type-I error at the returned rate.
    pub alpha_at_value: f64,
    /// `(1/n) log β` at the returned rate.
    pub log_beta_per_n_at_value: f64,
}

/// Largest rate `a` in the grid with `α(a) ≤ ε`, refined by bisection between
/// the bracketing grid points to 1e-4 resolution. `α(a)` is nondecreasing, so
/// the scan-and-bisect search is exact up to the resolution.
pub fn underline_d_estimate(
    rho_n: &DensityMatrix,
    sigma_n: &DensityMatrix,
    epsilon: f64,
    n: u32,
    rate_grid: &[f64],
) -> Result<UnderlineD> {
    check_ascending(rate_grid)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(QhtError::BadEpsilon(epsilon));
    }
    let alpha_at = |a: f64| -> Result<(f64, f64)> {
        let r = spectral_test(rho_n, sigma_n, a, n)?;
        Ok((r.alpha, r.log_beta / n as f64))
    };
    let mut last_feasible: Option<usize> = None;
    for (i, &a) in rate_grid.iter().enumerate() {
        let (alpha, _) = alpha_at(a)?;
        if alpha <= epsilon {
            last_feasible = Some(i);
        } else {
            break;
        }
    }
    let Some(k) = last_feasible else {
        let (alpha, lb) = alpha_at(rate_grid[0])?;
        return Ok(UnderlineD {
            value: rate_grid[0],
            feasible: false,
            alpha_at_value: alpha,
            log_beta_per_n_at_value: lb,
        });
    };
    let mut lo = rate_grid[k];
    if k + 1 < rate_grid.len() {
        let mut hi = rate_grid[k + 1];
        while hi - lo > 1e-4 {
            let mid = 0.5 * (lo + hi);
            let (alpha, _) = alpha_at(mid)?;
            if alpha <= epsilon {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (alpha, lb) = alpha_at(lo)?;
    Ok(UnderlineD {
        value: lo,
        feasible: true,
        alpha_at_value: alpha,
        log_beta_per_n_at_value: lb,
    })
}

/// Series of finite-`n` estimates (one per blocklength) at a fixed ε.
#[derive(Clone, Debug, Serialize)]
pub struct UnderlineDEstimate {
    pub epsilon: f64,
    pub n_values: Vec<u32>,
    pub estimates: Vec<UnderlineD>,
}

impl UnderlineDEstimate {
    /// CSV with header `n,a,alpha,log_beta_per_n`: each row records the
    /// operating point of the estimate-achieving test at that blocklength.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a,alpha,log_beta_per_n\n");
        for (n, e) in self.n_values.iter().zip(self.estimates.iter()) {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                n, e.value, e.alpha_at_value, e.log_beta_per_n_at_value
            ));
        }
        out
    }
}

/// Output of the combined mixed-source test of the direct part.
#[derive(Clone, Debug)]
pub struct DirectPartResult {
    /// The combined test `T_n = {Σ_i T_{i,n} ≥ e^{−nδ} I}`.
    pub test: TestOperator,
    /// `Tr[(I − T_n) ρ̄_i^{⊗n}]` per component.
    pub per_component_alpha: Vec<f64>,
    pub beta: f64,
    pub log_beta: f64,
    /// Proof-chain bound `log |J| − n(a+δ)` that `log β` must not exceed.
    pub beta_bound_log: f64,
    /// Per component: `(Tr[T_{i,n} ρ̄_i^{⊗n}], (√(e^{−nδ} q_i) + √(1−q_i))²)`
    /// with `q_i` the per-component type-I error of the combined test; the
    /// trace-inequality control on each component.
    pub component_trace_bounds: Vec<(f64, f64)>,
    /// `log Tr[T_{i,n} σ_n]` per component (each `≤ −n(a+2δ)`).
    pub component_beta_logs: Vec<f64>,
}

/// Builds the combined mixed-source test: componentwise spectral tests at
/// rate `a + 2δ`, summed and thresholded at `e^{−nδ}`.
///
/// Returns per-component type-I errors and the type-II error with its hard
/// bound `β ≤ |J| e^{−n(a+δ)}` (violation is an error, with 1e-9 relative
/// slack).
pub fn direct_part_test(
    spec: &MixedSourceSpec,
    sigma_n: &DensityMatrix,
    a: f64,
    delta: f64,
    n: u32,
) -> Result<DirectPartResult> {
    if delta <= 0.0 {
        return Err(QhtError::BadParameter(format!("delta must be positive, got {delta}")));
    }
    if n == 0 {
        return Err(QhtError::BadParameter("blocklength must be positive".into()));
    }
    let dim_n = sigma_n.dim();
    let nf = n as f64;
    let na2 = nf * (a + 2.0 * delta);

    let mut powers = Vec::with_capacity(spec.len());
    let mut sum = HermitianOperator::zeros(dim_n);
    let mut component_trace = Vec::with_capacity(spec.len());
    let mut component_beta_logs = Vec::with_capacity(spec.len());
    for c in spec.components() {
        let rho_i = tensor_power(&c.state, n)?;
        if rho_i.dim() != dim_n {
            return Err(QhtError::DimensionMismatch { left: rho_i.dim(), right: dim_n });
        }
        let tt = threshold_test(&rho_i, sigma_n, na2)?;
        let (alpha_i_own, log_beta_i) = threshold_errors(&tt, &rho_i, sigma_n);
        let dense = matches!(tt, ThresholdTest::Dense { .. });
        check_beta_exponent_guarantee(log_beta_i, na2, dim_n, dense)?;
        component_trace.push(1.0 - alpha_i_own); // Tr[T_{i,n} ρ_i^{⊗n}]
        component_beta_logs.push(log_beta_i);
        sum = HermitianOperator::lin_comb(1.0, &sum, 1.0, tt.test().op())?;
        powers.push(rho_i);
    }

    let shifted = HermitianOperator::lin_comb(
        1.0,
        &sum,
        -(-nf * delta).exp(),
        &HermitianOperator::identity(dim_n),
    )?;
    let test = positive_part_projection(&shifted)?;

    let mut per_component_alpha = Vec::with_capacity(spec.len());
    for rho_i in &powers {
        let alpha = (1.0 - trace_product(test.op(), rho_i.op())).clamp(0.0, 1.0);
        per_component_alpha.push(alpha);
    }

    let log_beta = if test.op().is_diagonal() && sigma_n.is_diagonal() {
        let q = sigma_n.op().diagonal_real();
        let mask = test.op().diagonal_real();
        let logs: Vec<f64> = mask
            .iter()
            .zip(q.iter())
            .filter(|(&m, &v)| m > 0.5 && v > 0.0)
            .map(|(_, &v)| v.ln())
            .collect();
        log_sum_exp(&logs)
    } else {
        trace_product(test.op(), sigma_n.op()).clamp(0.0, 1.0).ln()
    };
    let beta_bound_log = (spec.len() as f64).ln() - nf * (a + delta);
    let slack = 1e-9 * (1.0 + beta_bound_log.abs());
    let dense = !(test.op().is_diagonal() && sigma_n.is_diagonal());
    if log_beta > beta_bound_log + slack && !(dense && log_beta.exp() <= 1e-13 * dim_n as f64) {
        return Err(QhtError::BadParameter(format!(
            "direct-part bound violated: log beta {log_beta:.6e} above {beta_bound_log:.6e}"
        )));
    }

    let scale = (-nf * delta).exp();
    let component_trace_bounds = component_trace
        .iter()
        .zip(per_component_alpha.iter())
        .map(|(&lhs, &q)| {
            let bound = ((scale * q).sqrt() + (1.0 - q).max(0.0).sqrt()).powi(2);
            (lhs, bound)
        })
        .collect();

    Ok(DirectPartResult {
        test,
        per_component_alpha,
        beta: log_beta.exp(),
        log_beta,
        beta_bound_log,
        component_trace_bounds,
        component_beta_logs,
    })
}

/// Pinching-reduction comparison at fixed blocklength.
#[derive(Clone, Debug, Serialize)]
pub struct PinchingCompare {
    pub d_orig: UnderlineD,
    pub d_pinched: UnderlineD,
    /// Number of distinct eigenvalues of `σ_n`.
    pub d_n: usize,
    /// Recorded (not asserted) finite-`n` slack `(2/n)·log(1/η)` at `η = 1e-3`.
    pub slack: f64,
    pub n: u32,
}

/// Estimates the ε-feasible rate before and after pinching `ρ_n` by `σ_n`.
/// The proofs bound the difference by `(1/n) log d_n` plus vanishing terms;
/// the recorded slack is a convention, not a hard bound.
pub fn pinching_reduction_compare(
    rho_n: &DensityMatrix,
    sigma_n: &DensityMatrix,
    epsilon: f64,
    n: u32,
    grid: &[f64],
) -> Result<PinchingCompare> {
    let d_orig = underline_d_estimate(rho_n, sigma_n, epsilon, n, grid)?;
    let (pinched, d_n) = pinch(rho_n, sigma_n)?;
    let d_pinched = underline_d_estimate(&pinched, sigma_n, epsilon, n, grid)?;
    let eta: f64 = 1e-3;
    let slack = (2.0 / n as f64) * (1.0 / eta).ln();
    Ok(PinchingCompare { d_orig, d_pinched, d_n, slack, n })
}

/// Converse-footprint margins: with `T` the optimal Neyman–Pearson test for
/// the mixture at level ε and `a = −(1/n) log β(T)`, each component's
/// deficiency `α_i({ρ̄_i^{⊗n} − e^{n(a−δ)}σ_n ≥ 0}) − α_i(T) − e^{−nδ}`
/// must stay below numerical slack.
pub fn converse_deficiency_margins(
    spec: &MixedSourceSpec,
    sigma: &DensityMatrix,
    epsilon: f64,
    delta: f64,
    n: u32,
) -> Result<Vec<f64>> {
    let rho_n = crate::mixed::mixed_state(spec, n)?;
    let sigma_n = tensor_power(sigma, n)?;
    let np = optimal_beta(&rho_n, &sigma_n, epsilon)?;
    if np.beta <= 0.0 {
        return Err(QhtError::BadParameter(
            "converse check needs a nonzero optimal beta".into(),
        ));
    }
    let nf = n as f64;
    let a = -np.beta.ln() / nf;
    let mut margins = Vec::with_capacity(spec.len());
    for c in spec.components() {
        let rho_i = tensor_power(&c.state, n)?;
        let tt = threshold_test(&rho_i, &sigma_n, nf * (a - delta))?;
        let (alpha_def, _) = threshold_errors(&tt, &rho_i, &sigma_n);
        let alpha_opt = (1.0 - trace_product(np.test.op(), rho_i.op())).clamp(0.0, 1.0);
        margins.push(alpha_def - alpha_opt - (-nf * delta).exp());
    }
    Ok(margins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed::MixedSourceSpec;
    use crate::np::relative_entropy;
    use crate::verify::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(values).unwrap()
    }

    #[test]
    fn spectral_test_extreme_rates() {
        let rho = diag(&[0.8, 0.2]);
        let sigma = diag(&[0.5, 0.5]);
        // Threshold far below the spectrum accepts everything.
        let r = spectral_test(&rho, &sigma, -50.0, 1).unwrap();
        assert!(r.alpha <= 1e-12);
        // Threshold far above the spectrum rejects everything on supp σ.
        let r = spectral_test(&rho, &sigma, 50.0, 2).unwrap();
        assert!((r.alpha - 1.0).abs() <= 1e-12);
        assert_eq!(r.log_beta, f64::NEG_INFINITY);
    }

    #[test]
    fn spectral_test_guarantee_on_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(97);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 3);
            let sigma = random_density(&mut rng, 3);
            for a in [-1.0, 0.0, 0.05, 0.2, 1.0] {
                let r = spectral_test(&rho, &sigma, a, 1).unwrap();
                let na = a;
                assert!(
                    r.log_beta <= -na + 1e-9 * (1.0 + na.abs()) || r.beta <= 1e-12,
                    "beta exponent guarantee failed at a = {a}"
                );
            }
        }
    }

    #[test]
    fn spectral_test_log_domain_large_rate() {
        // Diagonal pair at n·a far beyond the float cap still works.
        let rho = diag(&[0.9, 0.1]);
        let sigma = diag(&[0.5, 0.5]);
        let rho_n = tensor_power(&rho, 8).unwrap();
        let sigma_n = tensor_power(&sigma, 8).unwrap();
        let r = spectral_test(&rho_n, &sigma_n, 100.0, 8).unwrap();
        assert!((r.alpha - 1.0).abs() <= 1e-12);

        // Non-commuting beyond the cap is refused.
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 2);
        assert!(matches!(
            spectral_test(&a, &b, 400.0, 1),
            Err(QhtError::RateOverflow { .. })
        ));
    }

    #[test]
    fn rate_sweep_type1_monotone() {
        let rho = diag(&[0.85, 0.15]);
        let sigma = diag(&[0.4, 0.6]);
        let rho_n = tensor_power(&rho, 6).unwrap();
        let sigma_n = tensor_power(&sigma, 6).unwrap();
        let grid = default_rate_grid(relative_entropy(&rho, &sigma).unwrap());
        let sweep = rate_sweep(&rho_n, &sigma_n, 6, &grid).unwrap();
        for w in sweep.type1.windows(2) {
            assert!(w[0] <= w[1] + 1e-9, "type-I must be nondecreasing in rate");
        }
        for (a, t2) in sweep.rates.iter().zip(sweep.type2_log.iter()) {
            assert!(-t2 >= a - 1e-12, "beta exponent below rate");
        }
        let csv = sweep.to_csv();
        assert!(csv.starts_with("n,a,alpha,log_beta_per_n\n"));
    }

    #[test]
    fn underline_d_identical_sources_near_zero() {
        let rho = diag(&[0.5, 0.5]);
        let grid = default_rate_grid(1.0);
        let est = underline_d_estimate(&rho, &rho, 0.4, 1, &grid).unwrap();
        assert!(est.value <= 0.02 + 1e-9, "estimate {} should be ~0", est.value);
    }

    #[test]
    fn underline_d_matches_classical_oracle_on_diagonal_iid() {
        let p = [0.85, 0.15];
        let q = [0.5, 0.5];
        let n = 12;
        let rho_n = tensor_power(&diag(&p), n).unwrap();
        let sigma_n = tensor_power(&diag(&q), n).unwrap();
        let grid = default_rate_grid(relative_entropy(&diag(&p), &diag(&q)).unwrap());
        let est = underline_d_estimate(&rho_n, &sigma_n, 0.5, n, &grid).unwrap();

        let ps = crate::classical::ClassicalSource::iid(&p, n as u64).unwrap();
        let qs = crate::classical::ClassicalSource::iid(&q, n as u64).unwrap();
        let table = crate::classical::spectrum(&ps, &qs).unwrap();
        let oracle = table.sup_rate(0.5).unwrap();
        assert!(
            (est.value - oracle).abs() <= 0.05,
            "estimate {} vs oracle {oracle}",
            est.value
        );
    }

    #[test]
    fn underline_d_trend_non_commuting() {
        // Nondecreasing trend (slack 0.02) over n for a non-commuting pair.
        let mut rng = ChaCha12Rng::seed_from_u64(103);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let grid = default_rate_grid(relative_entropy(&rho, &sigma).unwrap());
        let mut last = f64::NEG_INFINITY;
        for n in [4u32, 6, 8, 10] {
            let rho_n = tensor_power(&rho, n).unwrap();
            let sigma_n = tensor_power(&sigma, n).unwrap();
            let est = underline_d_estimate(&rho_n, &sigma_n, 0.5, n, &grid).unwrap();
            assert!(
                est.value >= last - 0.02,
                "trend violated at n = {n}: {} after {last}",
                est.value
            );
            last = est.value;
        }
    }

    #[test]
    fn underline_d_monotone_in_epsilon() {
        let rho_n = tensor_power(&diag(&[0.8, 0.2]), 6).unwrap();
        let sigma_n = tensor_power(&diag(&[0.5, 0.5]), 6).unwrap();
        let grid = default_rate_grid(0.5);
        let tight = underline_d_estimate(&rho_n, &sigma_n, 0.1, 6, &grid).unwrap();
        let loose = underline_d_estimate(&rho_n, &sigma_n, 0.6, 6, &grid).unwrap();
        assert!(tight.value <= loose.value + 1e-9);
    }

    #[test]
    fn underline_d_infeasible_flag() {
        // ε = 0 with a grid starting above the feasible range.
        let rho_n = tensor_power(&diag(&[0.6, 0.4]), 2).unwrap();
        let sigma_n = tensor_power(&diag(&[0.4, 0.6]), 2).unwrap();
        let grid: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let est = underline_d_estimate(&rho_n, &sigma_n, 0.0, 2, &grid).unwrap();
        assert!(!est.feasible);
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn direct_part_single_component_keeps_range() {
        let sigma = diag(&[0.5, 0.5]);
        let spec =
            MixedSourceSpec::from_weighted_states(vec![(1.0, diag(&[0.9, 0.1]))]).unwrap();
        let sigma_n = tensor_power(&sigma, 6).unwrap();
        let d = relative_entropy(&diag(&[0.9, 0.1]), &sigma).unwrap();
        let r = direct_part_test(&spec, &sigma_n, 0.5 * d, 0.05, 6).unwrap();
        // |J| = 1 and e^{−nδ} < 1: the combined test is the component test.
        let single = spectral_test(
            &tensor_power(&diag(&[0.9, 0.1]), 6).unwrap(),
            &sigma_n,
            0.5 * d + 0.1,
            6,
        )
        .unwrap();
        assert!((r.per_component_alpha[0] - single.alpha).abs() <= 1e-9);
    }

    #[test]
    fn direct_part_two_identical_components() {
        let sigma = diag(&[0.5, 0.5]);
        let state = diag(&[0.9, 0.1]);
        let spec = MixedSourceSpec::from_weighted_states(vec![
            (0.5, state.clone()),
            (0.5, state.clone()),
        ])
        .unwrap();
        let sigma_n = tensor_power(&sigma, 6).unwrap();
        let d = relative_entropy(&state, &sigma).unwrap();
        let r = direct_part_test(&spec, &sigma_n, 0.5 * d, 0.05, 6).unwrap();
        // A_n = 2 T_{1,n}: same range as the single test.
        assert!((r.per_component_alpha[0] - r.per_component_alpha[1]).abs() <= 1e-12);
    }

    #[test]
    fn direct_part_bound_and_lemma_control() {
        let sigma = diag(&[0.5, 0.5]);
        let spec = MixedSourceSpec::from_weighted_states(vec![
            (0.4, diag(&[0.9, 0.1])),
            (0.6, diag(&[0.2, 0.8])),
        ])
        .unwrap();
        let sigma_n = tensor_power(&sigma, 10).unwrap();
        let d1 = relative_entropy(&diag(&[0.9, 0.1]), &sigma).unwrap();
        let d2 = relative_entropy(&diag(&[0.2, 0.8]), &sigma).unwrap();
        let a = 0.9 * d1.min(d2);
        let r = direct_part_test(&spec, &sigma_n, a, 0.05, 10).unwrap();
        assert!(r.log_beta <= r.beta_bound_log + 1e-9);
        for (lhs, bound) in &r.component_trace_bounds {
            assert!(lhs <= &(bound + 1e-9), "trace-inequality control violated");
        }
        for lb in &r.component_beta_logs {
            assert!(*lb <= -10.0 * (a + 0.1) + 1e-9);
        }
    }

    #[test]
    fn pinching_compare_trivial_cases() {
        // Commuting pair: pinching changes nothing.
        let rho_n = tensor_power(&diag(&[0.8, 0.2]), 4).unwrap();
        let sigma_n = tensor_power(&diag(&[0.45, 0.55]), 4).unwrap();
        let grid = default_rate_grid(0.6);
        let c = pinching_reduction_compare(&rho_n, &sigma_n, 0.3, 4, &grid).unwrap();
        assert!((c.d_orig.value - c.d_pinched.value).abs() <= 1e-9);

        // σ maximally mixed: single eigenvalue, d_n = 1.
        let mut rng = ChaCha12Rng::seed_from_u64(107);
        let rho = random_density(&mut rng, 4);
        let sigma = DensityMatrix::maximally_mixed(4);
        let c = pinching_reduction_compare(&rho, &sigma, 0.3, 1, &grid).unwrap();
        assert_eq!(c.d_n, 1);
        assert!((c.d_orig.value - c.d_pinched.value).abs() <= 1e-9);
    }

    #[test]
    fn pinching_compare_qubit_iid() {
        // |d_orig − d_pinched| ≤ (log d_n)/n + 0.1 for a non-commuting pair.
        let mut rng = ChaCha12Rng::seed_from_u64(109);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let grid = default_rate_grid(relative_entropy(&rho, &sigma).unwrap());
        for n in [4u32, 6, 8] {
            let rho_n = tensor_power(&rho, n).unwrap();
            let sigma_n = tensor_power(&sigma, n).unwrap();
            let c = pinching_reduction_compare(&rho_n, &sigma_n, 0.3, n, &grid).unwrap();
            assert!(c.d_n <= n as usize + 1, "d_n = {} above n+1", c.d_n);
            let bound = (c.d_n as f64).ln() / n as f64 + 0.1;
            let diff = (c.d_orig.value - c.d_pinched.value).abs();
            assert!(diff <= bound, "pinching difference {diff} above {bound} at n = {n}");
        }
    }

    #[test]
    fn converse_deficiency_on_commuting_fixture() {
        let sigma = diag(&[0.5, 0.5]);
        let spec = MixedSourceSpec::from_weighted_states(vec![
            (0.4, diag(&[0.9, 0.1])),
            (0.6, diag(&[0.2, 0.8])),
        ])
        .unwrap();
        for n in [4u32, 8] {
            let margins = converse_deficiency_margins(&spec, &sigma, 0.25, 0.05, n).unwrap();
            for m in margins {
                assert!(m <= 1e-9, "deficiency margin {m} positive at n = {n}");
            }
        }
    }
}
