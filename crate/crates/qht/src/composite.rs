//! Composite testing against finitely generated convex alternative sets:
//! the minimax `β_ε(ρ‖S)`, tensor-word generator expansion, and finite-`n`
//! regularized relative entropy estimation.
//!
//! An alternative set is the convex hull of finitely many density matrices.
//! `β_ε(ρ‖S) = min_T max_{σ∈S} Tr[Tσ]` is computed through its concave inner
//! dual `λ ↦ β_ε(ρ‖σ_λ)` over simplex weights: every evaluation yields both a
//! lower bound (the value) and an upper bound (the returned test applied to
//! all generators), so the saddle is certified by the primal-dual gap.

use serde::{Deserialize, Serialize};

use crate::error::{QhtError, Result};
use crate::np::{optimal_beta, relative_entropy};
use crate::operator::{
    eigenvalues_only, trace_product, DensityMatrix, HermitianOperator, MatrixJson, TestOperator,
    PSD_TOL,
};
use crate::DEFAULT_MAX_DIM;

/// Certified gap required from the minimax solver.
pub const MINIMAX_GAP_TOL: f64 = 1e-6;

/// A finitely generated convex alternative set (the hull of `generators`).
#[derive(Clone, Debug)]
pub struct AlternativeSet {
    label: String,
    generators: Vec<DensityMatrix>,
}

/// JSON form: `{"label": s, "generators": [matrix JSON, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlternativeSetJson {
    pub label: String,
    pub generators: Vec<MatrixJson>,
}

impl AlternativeSet {
    pub fn new(label: impl Into<String>, generators: Vec<DensityMatrix>) -> Result<Self> {
        if generators.is_empty() {
            return Err(QhtError::Empty("alternative set needs at least one generator".into()));
        }
        let dim = generators[0].dim();
        for g in &generators {
            if g.dim() != dim {
                return Err(QhtError::DimensionMismatch { left: dim, right: g.dim() });
            }
        }
        Ok(Self { label: label.into(), generators })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generators(&self) -> &[DensityMatrix] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Convex mixture `Σ_j λ_j σ_j` of the generators.
    pub fn mixture(&self, weights: &[f64]) -> Result<DensityMatrix> {
        if weights.len() != self.generators.len() {
            return Err(QhtError::BadParameter(format!(
                "{} weights for {} generators",
                weights.len(),
                self.generators.len()
            )));
        }
        let mut acc = HermitianOperator::zeros(self.dim());
        for (w, g) in weights.iter().zip(self.generators.iter()) {
            if *w < -1e-15 {
                return Err(QhtError::BadParameter("negative mixture weight".into()));
            }
            acc = HermitianOperator::lin_comb(1.0, &acc, w.max(0.0), g.op())?;
        }
        DensityMatrix::trusted(acc)
    }

    /// Whether the hull contains a full-rank state, decided at the barycenter
    /// (whose support spans the union of generator supports). Reported, not
    /// enforced.
    pub fn full_rank_report(&self) -> (bool, f64) {
        let k = self.generators.len() as f64;
        let weights = vec![1.0 / k; self.generators.len()];
        let bary = self.mixture(&weights).expect("barycenter weights are valid");
        let min_ev = eigenvalues_only(bary.op())[0];
        (min_ev > PSD_TOL, min_ev)
    }

    pub fn to_json(&self) -> AlternativeSetJson {
        AlternativeSetJson {
            label: self.label.clone(),
            generators: self.generators.iter().map(|g| MatrixJson::from_operator(g.op())).collect(),
        }
    }

    pub fn from_json(json: &AlternativeSetJson) -> Result<Self> {
        let generators = json
            .generators
            .iter()
            .map(|m| m.to_density())
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.label.clone(), generators)
    }
}

/// Outcome of the minimax computation `β_ε(ρ‖S)`.
#[derive(Clone, Debug)]
pub struct MinimaxResult {
    /// Certified lower bound: `β_ε(ρ‖σ_λ)` at the worst mixture found.
    pub beta: f64,
    /// Simplex weights of the worst generator mixture.
    pub worst_mixture: Vec<f64>,
    /// Test achieving the upper bound.
    pub test: TestOperator,
    /// `max_j Tr[T σ_j]` at the returned test.
    pub primal_upper: f64,
    /// `primal_upper − beta` (`≥ −1e-9`, `≤ 1e-6` on converged instances).
    pub gap: f64,
    /// False when the gap target was not reached within the iteration budget.
    pub converged: bool,
}

fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    // Euclidean projection via the sorted-cumulative threshold rule.
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cum += u;
        let candidate = (cum - 1.0) / (i as f64 + 1.0);
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    for x in &mut out {
        *x /= total;
    }
    out
}

struct SaddleTracker<'a> {
    alt: &'a AlternativeSet,
    best_lower: f64,
    best_weights: Vec<f64>,
    best_upper: f64,
    best_test: Option<TestOperator>,
    /// Recent tests with their per-generator β rows, for test mixing.
    candidates: Vec<(TestOperator, Vec<f64>)>,
}

impl<'a> SaddleTracker<'a> {
    fn new(alt: &'a AlternativeSet, k: usize) -> Self {
        Self {
            alt,
            best_lower: f64::NEG_INFINITY,
            best_weights: vec![1.0 / k as f64; k],
            best_upper: f64::INFINITY,
            best_test: None,
            candidates: Vec::new(),
        }
    }

    /// Evaluates the inner problem at `weights`; returns the supergradient row.
    fn evaluate(&mut self, weights: &[f64], rho: &DensityMatrix, eps: f64) -> Result<Vec<f64>> {
        let sigma = self.alt.mixture(weights)?;
        let np = optimal_beta(rho, &sigma, eps)?;
        let row: Vec<f64> = self
            .alt
            .generators()
            .iter()
            .map(|g| trace_product(np.test.op(), g.op()))
            .collect();
        let upper = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if np.beta > self.best_lower {
            self.best_lower = np.beta;
            self.best_weights = weights.to_vec();
        }
        if upper < self.best_upper {
            self.best_upper = upper;
            self.best_test = Some(np.test.clone());
        }
        self.push_candidate(np.test, row.clone());
        Ok(row)
    }

    fn push_candidate(&mut self, test: TestOperator, row: Vec<f64>) {
        const KEEP: usize = 8;
        if self.candidates.len() == KEEP {
            self.candidates.remove(0);
        }
        self.candidates.push((test, row));
    }

    fn gap(&self) -> f64 {
        self.best_upper - self.best_lower
    }

    /// Minimizes `max_j Σ_m w_m Tr[T_m σ_j]` over mixing weights `w` of the
    /// candidate tests; convex piecewise-linear, attacked by projected
    /// subgradient descent. Mixtures of feasible tests stay feasible.
    fn polish_tests(&mut self) {
        let m = self.candidates.len();
        if m < 2 {
            return;
        }
        let k = self.alt.len();
        let mut w = vec![1.0 / m as f64; m];
        let mut best_w = w.clone();
        let value = |w: &[f64]| -> f64 {
            (0..k)
                .map(|j| (0..m).map(|i| w[i] * self.candidates[i].1[j]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut best_val = value(&w);
        for iter in 1..=400 {
            // Subgradient of the active generator row.
            let mut arg = 0;
            let mut cur = f64::NEG_INFINITY;
            for j in 0..k {
                let v: f64 = (0..m).map(|i| w[i] * self.candidates[i].1[j]).sum();
                if v > cur {
                    cur = v;
                    arg = j;
                }
            }
            let grad: Vec<f64> = (0..m).map(|i| self.candidates[i].1[arg]).collect();
            let step = 0.5 / (iter as f64).sqrt();
            let moved: Vec<f64> = w.iter().zip(grad.iter()).map(|(wi, gi)| wi - step * gi).collect();
            w = project_to_simplex(&moved);
            let v = value(&w);
            if v < best_val {
                best_val = v;
                best_w = w.clone();
            }
        }
        if best_val < self.best_upper {
            let mut op = HermitianOperator::zeros(self.candidates[0].0.dim());
            for (wi, (t, _)) in best_w.iter().zip(self.candidates.iter()) {
                op = HermitianOperator::lin_comb(1.0, &op, *wi, t.op()).expect("same dim");
            }
            self.best_upper = best_val;
            self.best_test = Some(TestOperator::trusted(op));
        }
    }
}

/// Minimax optimal type-II error against the hull: `β_ε(ρ‖S)`.
///
/// Concave supergradient ascent over the simplex localizes the worst mixture;
/// pairwise golden-section refinement then drives the certificate gap below
/// [`MINIMAX_GAP_TOL`]. Non-convergence is reported through the `converged`
/// flag, never silently.
pub fn composite_beta(
    rho: &DensityMatrix,
    alt: &AlternativeSet,
    epsilon: f64,
) -> Result<MinimaxResult> {
    if rho.dim() != alt.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: alt.dim() });
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(QhtError::BadEpsilon(epsilon));
    }
    let k = alt.len();
    let mut tracker = SaddleTracker::new(alt, k);

    if k == 1 {
        tracker.evaluate(&[1.0], rho, epsilon)?;
        let gap = tracker.gap();
        return Ok(MinimaxResult {
            beta: tracker.best_lower,
            worst_mixture: vec![1.0],
            test: tracker.best_test.expect("evaluated once"),
            primal_upper: tracker.best_upper,
            gap,
            converged: gap <= MINIMAX_GAP_TOL,
        });
    }

    // Phase 1: projected supergradient ascent with a diminishing 1/√k step.
    let mut weights = vec![1.0 / k as f64; k];
    let budget_ascent = 150usize;
    for iter in 1..=budget_ascent {
        let row = tracker.evaluate(&weights, rho, epsilon)?;
        if tracker.gap() <= MINIMAX_GAP_TOL {
            break;
        }
        let step = 0.5 / (iter as f64).sqrt();
        let moved: Vec<f64> =
            weights.iter().zip(row.iter()).map(|(w, g)| w + step * g).collect();
        weights = project_to_simplex(&moved);
    }

    // Phase 2: pairwise golden-section refinement around the incumbent.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    'refine: for _ in 0..6 {
        if tracker.gap() <= MINIMAX_GAP_TOL {
            break;
        }
        let before = tracker.best_lower;
        let base = tracker.best_weights.clone();
        for i in 0..k {
            for j in (i + 1)..k {
                let mass = base[i] + base[j];
                let pair_weights = |theta: f64| -> Vec<f64> {
                    let mut w = base.clone();
                    w[i] = theta * mass;
                    w[j] = (1.0 - theta) * mass;
                    w
                };
                if mass <= 0.0 {
                    // Empty pair: probe reviving it from the incumbent point.
                    let mut w = base.clone();
                    for x in w.iter_mut() {
                        *x *= 0.99;
                    }
                    w[i] += 0.005;
                    w[j] += 0.005;
                    tracker.evaluate(&project_to_simplex(&w), rho, epsilon)?;
                    continue;
                }
                // Golden section needs the function value at the probe, not
                // the incumbent; evaluate the inner problem directly.
                let h = |tr: &mut SaddleTracker, theta: f64| -> Result<f64> {
                    let w = pair_weights(theta);
                    let sigma = tr.alt.mixture(&w)?;
                    let np = optimal_beta(rho, &sigma, epsilon)?;
                    let row: Vec<f64> = tr
                        .alt
                        .generators()
                        .iter()
                        .map(|g| trace_product(np.test.op(), g.op()))
                        .collect();
                    let upper = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if np.beta > tr.best_lower {
                        tr.best_lower = np.beta;
                        tr.best_weights = w;
                    }
                    if upper < tr.best_upper {
                        tr.best_upper = upper;
                        tr.best_test = Some(np.test.clone());
                    }
                    tr.push_candidate(np.test, row);
                    Ok(np.beta)
                };
                let (mut a, mut b) = (0.0f64, 1.0f64);
                let mut x1 = b - inv_phi * (b - a);
                let mut x2 = a + inv_phi * (b - a);
                let mut f1 = h(&mut tracker, x1)?;
                let mut f2 = h(&mut tracker, x2)?;
                for _ in 0..48 {
                    if tracker.gap() <= MINIMAX_GAP_TOL {
                        break 'refine;
                    }
                    if f1 < f2 {
                        a = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = a + inv_phi * (b - a);
                        f2 = h(&mut tracker, x2)?;
                    } else {
                        b = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = b - inv_phi * (b - a);
                        f1 = h(&mut tracker, x1)?;
                    }
                }
            }
        }
        if tracker.best_lower - before < 1e-14 {
            break;
        }
    }

    // Phase 3: close a remaining certificate gap by mixing candidate tests.
    if tracker.gap() > MINIMAX_GAP_TOL {
        tracker.polish_tests();
    }

    let gap = tracker.gap();
    let converged = gap <= MINIMAX_GAP_TOL;
    if !converged {
        log::warn!(
            "composite_beta: gap {gap:.3e} above target {MINIMAX_GAP_TOL:.1e} after budget"
        );
    }
    Ok(MinimaxResult {
        beta: tracker.best_lower,
        worst_mixture: tracker.best_weights.clone(),
        test: tracker.best_test.expect("at least one evaluation"),
        primal_upper: tracker.best_upper,
        gap,
        converged,
    })
}

/// All `n`-fold tensor words over the base generators (hull level `n`).
pub fn build_tensor_generators(base: &AlternativeSet, n: u32) -> Result<AlternativeSet> {
    if n == 0 {
        return Err(QhtError::BadParameter("tensor words need n >= 1".into()));
    }
    let g = base.len();
    let word_count = match g.checked_pow(n) {
        Some(c) if c <= 4096 => c,
        _ => return Err(QhtError::GeneratorOverflow { count: g.pow(n.min(8)), cap: 4096 }),
    };
    match base.dim().checked_pow(n) {
        Some(d) if d <= DEFAULT_MAX_DIM => {}
        _ => {
            return Err(QhtError::DimensionOverflow {
                dim: base.dim(),
                power: n,
                max_dim: DEFAULT_MAX_DIM,
            })
        }
    }
    let mut words = Vec::with_capacity(word_count);
    let mut indices = vec![0usize; n as usize];
    loop {
        let mut acc = base.generators()[indices[0]].matrix().clone();
        for &idx in &indices[1..] {
            acc = acc.kronecker(base.generators()[idx].matrix());
        }
        words.push(DensityMatrix::trusted(HermitianOperator::new_unchecked(acc))?);
        // Odometer increment over generator indices.
        let mut pos = n as usize;
        loop {
            if pos == 0 {
                return AlternativeSet::new(format!("{}^({n})", base.label()), words);
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < g {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Minimizes `λ ↦ D(ρ_n ‖ Σ_j λ_j σ_j)` (convex) over the simplex by cyclic
/// pairwise ternary search. Returns the value in nats and the minimizer.
/// All-mixtures-support-deficient inputs yield the `+∞` sentinel.
pub fn min_relative_entropy_over_hull(
    rho_n: &DensityMatrix,
    alt: &AlternativeSet,
) -> Result<(f64, Vec<f64>)> {
    if rho_n.dim() != alt.dim() {
        return Err(QhtError::DimensionMismatch { left: rho_n.dim(), right: alt.dim() });
    }
    let k = alt.len();
    let f = |w: &[f64]| -> Result<f64> {
        let sigma = alt.mixture(w)?;
        relative_entropy(rho_n, &sigma)
    };
    let mut weights = vec![1.0 / k as f64; k];
    let mut value = f(&weights)?;
    if k == 1 || !value.is_finite() {
        // The barycenter support spans the union of generator supports, so an
        // infinite value here means every mixture is support-deficient.
        return Ok((value, weights));
    }
    for _cycle in 0..200 {
        let mut improved = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let mass = weights[i] + weights[j];
                if mass <= 1e-15 {
                    continue;
                }
                let eval = |theta: f64| -> Result<f64> {
                    let mut w = weights.clone();
                    w[i] = theta * mass;
                    w[j] = (1.0 - theta) * mass;
                    f(&w)
                };
                let (mut a, mut b) = (0.0f64, 1.0f64);
                for _ in 0..60 {
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if eval(m1)? <= eval(m2)? {
                        b = m2;
                    } else {
                        a = m1;
                    }
                }
                let theta = 0.5 * (a + b);
                let candidate = eval(theta)?;
                if candidate < value {
                    improved += value - candidate;
                    value = candidate;
                    weights[i] = theta * mass;
                    weights[j] = (1.0 - theta) * mass;
                }
            }
        }
        if improved < 1e-9 {
            break;
        }
    }
    Ok((value, weights))
}

/// Per-`n` series `(n, (1/n)·min_{σ∈hull(words)} D(ρ̄^{⊗n}‖σ))`. No limit is
/// claimed; the series is reported for inspection.
pub fn regularized_divergence_estimate(
    rho_base: &DensityMatrix,
    base: &AlternativeSet,
    n_max: u32,
) -> Result<Vec<(u32, f64)>> {
    if n_max == 0 {
        return Err(QhtError::BadParameter("n_max must be positive".into()));
    }
    let mut series = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let rho_n = crate::operator::tensor_power(rho_base, n)?;
        let words = build_tensor_generators(base, n)?;
        let (value, _) = min_relative_entropy_over_hull(&rho_n, &words)?;
        series.push((n, value / n as f64));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::random_density;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn hull(label: &str, gens: Vec<DensityMatrix>) -> AlternativeSet {
        AlternativeSet::new(label, gens).unwrap()
    }

    #[test]
    fn singleton_hull_matches_np() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let alt = hull("single", vec![sigma.clone()]);
        let mm = composite_beta(&rho, &alt, 0.3).unwrap();
        let np = optimal_beta(&rho, &sigma, 0.3).unwrap();
        assert_relative_eq!(mm.beta, np.beta, epsilon = 1e-9);
        assert!(mm.gap <= MINIMAX_GAP_TOL);
    }

    #[test]
    fn hull_containing_null_state_floors_beta() {
        let mut rng = ChaCha12Rng::seed_from_u64(73);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let alt = hull("with-null", vec![rho.clone(), sigma]);
        let eps = 0.2;
        let mm = composite_beta(&rho, &alt, eps).unwrap();
        assert!(mm.beta >= 1.0 - eps - 1e-7, "beta {} below 1-eps", mm.beta);
    }

    #[test]
    fn qubit_two_generator_hull_matches_grid_oracle() {
        let rho = DensityMatrix::from_diagonal(&[0.85, 0.15]).unwrap();
        let g1 = DensityMatrix::from_diagonal(&[0.55, 0.45]).unwrap();
        let g2 = DensityMatrix::from_diagonal(&[0.25, 0.75]).unwrap();
        let alt = hull("two-diag", vec![g1.clone(), g2.clone()]);
        let eps = 0.2;
        let mm = composite_beta(&rho, &alt, eps).unwrap();

        let mut best = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let lam = i as f64 / 10_000.0;
            let sigma = alt.mixture(&[lam, 1.0 - lam]).unwrap();
            let b = optimal_beta(&rho, &sigma, eps).unwrap().beta;
            best = best.max(b);
        }
        assert!((mm.beta - best).abs() <= 1e-5, "minimax {} vs grid {}", mm.beta, best);
        assert!(mm.gap <= MINIMAX_GAP_TOL);
        assert!(mm.gap >= -1e-9);
    }

    #[test]
    fn generator_vertex_sufficiency() {
        // max over the hull of Tr[Tσ] is attained at a generator.
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        let gens: Vec<DensityMatrix> = (0..3).map(|_| random_density(&mut rng, 2)).collect();
        let alt = hull("three", gens);
        let t = crate::verify::random_test(&mut rng, 2);
        let gen_max = alt
            .generators()
            .iter()
            .map(|g| trace_product(t.op(), g.op()))
            .fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..3).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let mixed = alt.mixture(&w).unwrap();
            assert!(trace_product(t.op(), mixed.op()) <= gen_max + 1e-12);
        }
    }

    #[test]
    fn tensor_words_counting() {
        let s1 = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
        let s2 = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let single = hull("s", vec![s1.clone()]);
        let words = build_tensor_generators(&single, 3).unwrap();
        assert_eq!(words.len(), 1);
        assert_eq!(words.dim(), 8);

        let base = hull("b", vec![s1, s2]);
        let words = build_tensor_generators(&base, 2).unwrap();
        assert_eq!(words.len(), 4);
    }

    #[test]
    fn words_beat_iid_only_generators() {
        let s1 = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
        let s2 = DensityMatrix::from_diagonal(&[0.2, 0.8]).unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let rho2 = crate::operator::tensor_power(&rho, 2).unwrap();
        let base = hull("b", vec![s1.clone(), s2.clone()]);
        let words = build_tensor_generators(&base, 2).unwrap();
        let iid_only = hull(
            "iid",
            vec![
                crate::operator::tensor_power(&s1, 2).unwrap(),
                crate::operator::tensor_power(&s2, 2).unwrap(),
            ],
        );
        let eps = 0.2;
        let with_words = composite_beta(&rho2, &words, eps).unwrap();
        let with_iid = composite_beta(&rho2, &iid_only, eps).unwrap();
        assert!(with_words.beta >= with_iid.beta - 1e-7);
    }

    #[test]
    fn min_divergence_singleton_and_membership() {
        let mut rng = ChaCha12Rng::seed_from_u64(83);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let alt = hull("s", vec![sigma.clone()]);
        let (v, _) = min_relative_entropy_over_hull(&rho, &alt).unwrap();
        assert_relative_eq!(v, relative_entropy(&rho, &sigma).unwrap(), epsilon = 1e-9);

        let alt = hull("self", vec![rho.clone(), sigma]);
        let (v, _) = min_relative_entropy_over_hull(&rho, &alt).unwrap();
        assert!(v.abs() <= 1e-7, "self membership should reach 0, got {v}");
    }

    #[test]
    fn min_divergence_matches_grid() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let g1 = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let g2 = DensityMatrix::from_diagonal(&[0.1, 0.9]).unwrap();
        let alt = hull("two", vec![g1.clone(), g2.clone()]);
        let (v, _) = min_relative_entropy_over_hull(&rho, &alt).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=10_000 {
            let lam = i as f64 / 10_000.0;
            let sigma = alt.mixture(&[lam, 1.0 - lam]).unwrap();
            best = best.min(relative_entropy(&rho, &sigma).unwrap());
        }
        assert!((v - best).abs() <= 1e-6, "hull min {v} vs grid {best}");
    }

    #[test]
    fn regularized_series_examples() {
        // Singleton base: the series is constant D(ρ̄‖σ) by additivity.
        let rho = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
        let d = relative_entropy(&rho, &sigma).unwrap();
        let base = hull("s", vec![sigma.clone()]);
        let series = regularized_divergence_estimate(&rho, &base, 3).unwrap();
        for (_, v) in &series {
            assert_relative_eq!(*v, d, epsilon = 1e-7);
        }

        // ρ̄ itself a generator: all zeros.
        let base = hull("self", vec![rho.clone(), sigma.clone()]);
        let series = regularized_divergence_estimate(&rho, &base, 2).unwrap();
        for (_, v) in &series {
            assert!(v.abs() <= 1e-7);
        }

        // Two-generator base: nonincreasing within tolerance.
        let g1 = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let g2 = DensityMatrix::from_diagonal(&[0.15, 0.85]).unwrap();
        let base = hull("pair", vec![g1, g2]);
        let series = regularized_divergence_estimate(&rho, &base, 3).unwrap();
        for w in series.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-6, "series must not increase: {series:?}");
        }
    }

    #[test]
    fn full_rank_report() {
        let pure1 = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let pure2 = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        let alt = hull("pures", vec![pure1.clone(), pure2]);
        let (full, min_ev) = alt.full_rank_report();
        assert!(full && min_ev > 0.4);

        let alone = hull("one-pure", vec![pure1]);
        let (full, _) = alone.full_rank_report();
        assert!(!full);
    }
}
