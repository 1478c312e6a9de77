//! Exact classical hypothesis testing over type classes in log-domain
//! arithmetic: the independent oracle for every commuting fixture, the
//! likelihood-ratio spectrum, and the exponential-mixture counterexample.
//!
//! Probabilities are represented by natural logarithms throughout; class
//! multiplicities go through `ln Γ`, so blocklengths in the thousands cost
//! only as many terms as there are type classes (`n+1` for a binary
//! alphabet).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{QhtError, Result};
use crate::operator::{
    cluster_starts, commutator_max_norm, eig, symmetrize_in_place, CMatrix, DensityMatrix,
    HermitianOperator,
};

/// Cap on the number of enumerated type classes.
const MAX_CLASSES: usize = 10_000_000;

/// `log(Σ e^{x_i})` with the usual max shift; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - m).exp()).sum();
    m + sum.ln()
}

/// One IID mixture component: log weight and per-symbol log probabilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalComponent {
    pub log_w: f64,
    pub log_p: Vec<f64>,
}

/// One type class: symbol counts, log multinomial multiplicity, per-component
/// log class probability, and the mixture log class probability.
#[derive(Clone, Debug)]
pub struct TypeClass {
    pub counts: Vec<u64>,
    pub log_multiplicity: f64,
    pub component_log_probs: Vec<f64>,
    pub log_prob: f64,
}

/// A log-domain distribution over length-`n` type classes, possibly a finite
/// mixture of IID components over a shared alphabet.
#[derive(Clone, Debug)]
pub struct ClassicalSource {
    alphabet: usize,
    n: u64,
    components: Vec<ClassicalComponent>,
    classes: Vec<TypeClass>,
}

/// JSON form: `{"alphabet": k, "components": [{"log_w": lw, "log_p": [...]}], "n": n}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalSourceJson {
    pub alphabet: usize,
    pub components: Vec<ClassicalComponent>,
    pub n: u64,
}

fn enumerate_compositions(alphabet: usize, n: u64) -> Result<Vec<Vec<u64>>> {
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut current = vec![0u64; alphabet];
    fn rec(
        out: &mut Vec<Vec<u64>>,
        current: &mut Vec<u64>,
        pos: usize,
        remaining: u64,
        alphabet: usize,
    ) -> Result<()> {
        if pos == alphabet - 1 {
            current[pos] = remaining;
            if out.len() >= MAX_CLASSES {
                return Err(QhtError::BadParameter(format!(
                    "type-class table exceeds {MAX_CLASSES} entries"
                )));
            }
            out.push(current.clone());
            return Ok(());
        }
        for c in 0..=remaining {
            current[pos] = c;
            rec(out, current, pos + 1, remaining - c, alphabet)?;
        }
        Ok(())
    }
    rec(&mut out, &mut current, 0, n, alphabet)?;
    Ok(out)
}

impl ClassicalSource {
    /// Builds the type-class table for a mixture of IID components.
    ///
    /// `components` holds linear-domain `(weight, per_symbol_probs)`; weights
    /// must sum to one and each probability vector must sum to one.
    pub fn new(alphabet: usize, components: &[(f64, Vec<f64>)], n: u64) -> Result<Self> {
        if alphabet == 0 {
            return Err(QhtError::BadParameter("alphabet must be nonempty".into()));
        }
        if components.is_empty() {
            return Err(QhtError::Empty("classical source needs at least one component".into()));
        }
        if n == 0 {
            return Err(QhtError::BadParameter("blocklength must be positive".into()));
        }
        let weight_sum: f64 = components.iter().map(|c| c.0).sum();
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(QhtError::BadParameter(format!(
                "component weights sum to {weight_sum}, expected 1"
            )));
        }
        let mut logs = Vec::with_capacity(components.len());
        for (w, probs) in components {
            if *w <= 0.0 {
                return Err(QhtError::BadParameter("component weights must be positive".into()));
            }
            if probs.len() != alphabet {
                return Err(QhtError::AlphabetMismatch { left: probs.len(), right: alphabet });
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
                return Err(QhtError::BadParameter(format!(
                    "symbol probabilities sum to {total}, expected 1"
                )));
            }
            logs.push(ClassicalComponent {
                log_w: w.ln(),
                log_p: probs.iter().map(|&p| p.ln()).collect(),
            });
        }
        Self::from_log_components(alphabet, logs, n)
    }

    /// Single IID component.
    pub fn iid(probs: &[f64], n: u64) -> Result<Self> {
        Self::new(probs.len(), &[(1.0, probs.to_vec())], n)
    }

    pub fn from_json(json: &ClassicalSourceJson) -> Result<Self> {
        Self::from_log_components(json.alphabet, json.components.clone(), json.n)
    }

    fn from_log_components(
        alphabet: usize,
        components: Vec<ClassicalComponent>,
        n: u64,
    ) -> Result<Self> {
        let counts_list = enumerate_compositions(alphabet, n)?;
        let ln_n_fact = ln_gamma(n as f64 + 1.0);
        let mut classes = Vec::with_capacity(counts_list.len());
        for counts in counts_list {
            let log_multiplicity =
                ln_n_fact - counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>();
            let component_log_probs: Vec<f64> = components
                .iter()
                .map(|comp| {
                    let mut acc = log_multiplicity;
                    for (x, &c) in counts.iter().enumerate() {
                        if c > 0 {
                            acc += c as f64 * comp.log_p[x];
                        }
                    }
                    acc
                })
                .collect();
            let weighted: Vec<f64> = component_log_probs
                .iter()
                .zip(components.iter())
                .map(|(lp, comp)| comp.log_w + lp)
                .collect();
            let log_prob = log_sum_exp(&weighted);
            classes.push(TypeClass { counts, log_multiplicity, component_log_probs, log_prob });
        }
        let source = Self { alphabet, n, components, classes };
        source.check_normalization()?;
        Ok(source)
    }

    fn check_normalization(&self) -> Result<()> {
        for (i, _) in self.components.iter().enumerate() {
            let logs: Vec<f64> =
                self.classes.iter().map(|c| c.component_log_probs[i]).collect();
            let total = log_sum_exp(&logs);
            if total.abs() > 1e-9 {
                return Err(QhtError::BadParameter(format!(
                    "component {i} class probabilities normalize to exp({total:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn blocklength(&self) -> u64 {
        self.n
    }

    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    pub fn components(&self) -> &[ClassicalComponent] {
        &self.components
    }

    pub fn to_json(&self) -> ClassicalSourceJson {
        ClassicalSourceJson {
            alphabet: self.alphabet,
            components: self.components.clone(),
            n: self.n,
        }
    }
}

fn check_compatible(p: &ClassicalSource, q: &ClassicalSource) -> Result<()> {
    if p.alphabet != q.alphabet {
        return Err(QhtError::AlphabetMismatch { left: p.alphabet, right: q.alphabet });
    }
    if p.n != q.n {
        return Err(QhtError::BlocklengthMismatch { left: p.n as usize, right: q.n as usize });
    }
    Ok(())
}

/// Exact classical Neyman–Pearson optimum at type-I budget `ε`.
///
/// Sorts type classes by log-likelihood ratio descending, accepts greedily
/// until the `1 − ε` acceptance mass is reached, and randomizes the boundary
/// class. Returns `(log β, boundary log-likelihood ratio, γ)`.
pub fn classical_optimal_beta(
    p: &ClassicalSource,
    q: &ClassicalSource,
    epsilon: f64,
) -> Result<(f64, f64, f64)> {
    check_compatible(p, q)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(QhtError::BadEpsilon(epsilon));
    }
    let k = p.classes.len();
    let llr = |i: usize| -> f64 {
        let lp = p.classes[i].log_prob;
        let lq = q.classes[i].log_prob;
        if lp == f64::NEG_INFINITY {
            // No null mass: accepting buys nothing, push to the rejection end.
            f64::NEG_INFINITY
        } else if lq == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            lp - lq
        }
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| llr(b).partial_cmp(&llr(a)).expect("no NaN ratios"));

    let target = 1.0 - epsilon;
    let mut accepted_q: Vec<f64> = Vec::new();
    let mut cum_p = 0.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    let mut gamma = 0.0f64;
    let mut threshold = f64::INFINITY;
    let mut boundary_q = f64::NEG_INFINITY;
    for &i in &order {
        let remaining = target - cum_p;
        if remaining <= 1e-15 {
            break;
        }
        let mass = p.classes[i].log_prob.exp();
        threshold = llr(i);
        if mass <= remaining + 1e-12 {
            accepted_q.push(q.classes[i].log_prob);
            let y = mass - comp;
            let t = cum_p + y;
            comp = (t - cum_p) - y;
            cum_p = t;
        } else {
            gamma = remaining / mass;
            boundary_q = q.classes[i].log_prob;
            break;
        }
    }
    let mut beta_log = log_sum_exp(&accepted_q);
    if gamma > 0.0 && boundary_q > f64::NEG_INFINITY {
        beta_log = log_sum_exp(&[beta_log, gamma.ln() + boundary_q]);
    }
    Ok((beta_log, threshold, gamma))
}

/// The `sup{R : Σ_{rate ≤ R} mass ≤ ε}` step-function scan shared by the
/// classical spectrum and the mixed-source step exponent.
///
/// Pairs need not be sorted; rates within `1e-12` of each other are merged.
/// Masses accumulate with Kahan compensation. Returns the largest rate if no
/// finite rate pushes the cumulative mass above `ε` (`+∞` rates never enter
/// any finite sum).
pub fn sup_rate_with_budget(pairs: &[(f64, f64)], epsilon: f64) -> Result<f64> {
    if epsilon >= 1.0 {
        return Err(QhtError::EpsilonAtOne(epsilon));
    }
    if epsilon < 0.0 {
        return Err(QhtError::BadEpsilon(epsilon));
    }
    if pairs.is_empty() {
        return Err(QhtError::Empty("step scan needs at least one (rate, mass) pair".into()));
    }
    let mut input: Vec<(f64, f64)> = pairs.to_vec();
    input.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN rates"));
    let mut sorted: Vec<(f64, f64)> = Vec::new();
    for (rate, mass) in input {
        match sorted.last_mut() {
            Some(last) if rate.is_finite() && (rate - last.0).abs() <= 1e-12 => last.1 += mass,
            _ => sorted.push((rate, mass)),
        }
    }
    let mut cum = 0.0f64;
    let mut comp = 0.0f64;
    for &(rate, mass) in &sorted {
        if !rate.is_finite() {
            continue;
        }
        let y = mass - comp;
        let t = cum + y;
        comp = (t - cum) - y;
        cum = t;
        if cum > epsilon + 1e-12 {
            return Ok(rate);
        }
    }
    Ok(sorted.last().map(|&(r, _)| r).expect("nonempty"))
}

/// Cumulative likelihood-ratio spectrum `F_n(R) = Pr_P[(1/n) log(P/Q) ≤ R]`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTable {
    /// Rows `(R, F_n(R))` at every attained normalized ratio value, ascending.
    pub rows: Vec<(f64, f64)>,
    pub n: u64,
}

impl SpectrumTable {
    /// Finite-`n` spectral inf-divergence proxy: the largest rate whose
    /// left-tail mass stays within `ε`.
    pub fn sup_rate(&self, epsilon: f64) -> Result<f64> {
        sup_rate_with_budget(&self.mass_pairs(), epsilon)
    }

    /// Per-rate mass increments recovered from the cumulative rows.
    pub fn mass_pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut prev = 0.0;
        for &(r, f) in &self.rows {
            out.push((r, f - prev));
            prev = f;
        }
        out
    }
}

/// Evaluates the exact likelihood-ratio spectrum of `P` against `Q` over
/// type classes; the grid contains every attained ratio value.
pub fn spectrum(p: &ClassicalSource, q: &ClassicalSource) -> Result<SpectrumTable> {
    check_compatible(p, q)?;
    let n = p.n as f64;
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(p.classes.len());
    for (cp, cq) in p.classes.iter().zip(q.classes.iter()) {
        let mass = cp.log_prob.exp();
        if mass == 0.0 {
            continue;
        }
        let rate = if cq.log_prob == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (cp.log_prob - cq.log_prob) / n
        };
        points.push((rate, mass));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN rates"));
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut cum = 0.0f64;
    let mut comp = 0.0f64;
    for (rate, mass) in points {
        let y = mass - comp;
        let t = cum + y;
        comp = (t - cum) - y;
        cum = t;
        match rows.last_mut() {
            Some(last) if last.0 == rate => last.1 = cum,
            _ => rows.push((rate, cum)),
        }
    }
    Ok(SpectrumTable { rows, n: p.n })
}

/// One row of the exponential-mixture counterexample table.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentialMixtureRow {
    pub n: u64,
    /// Ratio exponent of each point-mass component against the reference (`= d`).
    pub component_exponent: f64,
    /// Ratio exponent of the uniform mixture against the reference (`= d − R`).
    pub mixture_exponent: f64,
    /// Shortfall of the mixture exponent below the worst component.
    pub gap: f64,
    /// Reference mass left outside the `M_n = e^{nR}` support points.
    pub remainder_mass: f64,
}

/// The exponentially-large-mixture construction, evaluated analytically in
/// log domain at each requested blocklength.
///
/// `M_n = e^{nR}` point masses each carry reference mass `e^{−nd}`; the
/// construction is exchangeable over the points, so one representative point
/// suffices and no exponential enumeration occurs. The mixture puts mass
/// `e^{−nR}` on each point, so its ratio exponent is `d − R` while every
/// component's is `d`.
pub fn exponential_mixture_counterexample(
    d: f64,
    r: f64,
    n_list: &[u64],
) -> Result<Vec<ExponentialMixtureRow>> {
    if !(d > r && r > 0.0) {
        return Err(QhtError::BadParameter(format!(
            "construction requires d > R > 0, got d = {d}, R = {r}"
        )));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(QhtError::BadParameter("blocklength must be positive".into()));
        }
        let nf = n as f64;
        // Representative point, all in log domain:
        //   log ρ_{i,n}(i) = 0, log σ_n(i) = −n d, log ρ_n(i) = −n R.
        let log_component = 0.0f64;
        let log_sigma = -(nf * d);
        let log_mixture = -(nf * r);
        let component_exponent = (log_component - log_sigma) / nf;
        let mixture_exponent = (log_mixture - log_sigma) / nf;
        let remainder_mass = -(-nf * (d - r)).exp_m1();
        rows.push(ExponentialMixtureRow {
            n,
            component_exponent,
            mixture_exponent,
            gap: component_exponent - mixture_exponent,
            remainder_mass,
        });
    }
    Ok(rows)
}

/// Simultaneously diagonalizes a commuting family of Hermitian operators by
/// sequential eigenspace refinement. Returns each operator's diagonal in the
/// common basis; fails if any pair fails to commute within `1e-9`.
pub fn simultaneous_diagonalize(ops: &[&HermitianOperator]) -> Result<Vec<Vec<f64>>> {
    if ops.is_empty() {
        return Err(QhtError::Empty("no operators to diagonalize".into()));
    }
    let d = ops[0].dim();
    for op in ops {
        if op.dim() != d {
            return Err(QhtError::DimensionMismatch { left: d, right: op.dim() });
        }
    }
    if ops.iter().all(|op| op.is_diagonal()) {
        return Ok(ops.iter().map(|op| op.diagonal_real()).collect());
    }
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            let c = commutator_max_norm(ops[i], ops[j]);
            if c > 1e-9 {
                return Err(QhtError::NonCommuting { commutator: c });
            }
        }
    }

    // Basis refinement: start from the full space as one block; for each
    // operator, diagonalize its restriction to every block and split blocks
    // by eigenvalue clusters.
    let mut basis = CMatrix::identity(d, d);
    let mut blocks: Vec<(usize, usize)> = vec![(0, d)]; // (start, len)
    for op in ops {
        let rotated = basis.adjoint() * op.matrix() * &basis;
        let mut new_blocks = Vec::new();
        for &(start, len) in &blocks {
            if len == 1 {
                new_blocks.push((start, 1));
                continue;
            }
            let sub = rotated.view((start, start), (len, len)).into_owned();
            let sub_op = HermitianOperator::new_unchecked(symmetrize_in_place(sub));
            let sys = eig(&sub_op)?;
            let rotated_cols = basis.columns(start, len) * &sys.eigenvectors;
            basis.columns_mut(start, len).copy_from(&rotated_cols);
            for (s, l) in windows_from_clusters(&sys.eigenvalues) {
                new_blocks.push((start + s, l));
            }
        }
        blocks = new_blocks;
    }

    let mut out = Vec::with_capacity(ops.len());
    for op in ops {
        let rotated = basis.adjoint() * op.matrix() * &basis;
        let mut off_max = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off_max = off_max.max(rotated[(i, j)].norm_sqr().sqrt());
                }
            }
        }
        if off_max > 1e-9 {
            return Err(QhtError::NonCommuting { commutator: off_max });
        }
        out.push((0..d).map(|i| rotated[(i, i)].re).collect());
    }
    Ok(out)
}

fn windows_from_clusters(ascending: &[f64]) -> Vec<(usize, usize)> {
    let starts = cluster_starts(ascending);
    let mut out = Vec::with_capacity(starts.len());
    for (k, &s) in starts.iter().enumerate() {
        let end = if k + 1 < starts.len() { starts[k + 1] } else { ascending.len() };
        out.push((s, end - s));
    }
    out
}

/// Bridges a commuting quantum pair to classical sources at `n = 1` via the
/// simultaneous eigenbasis. Non-commuting input is an explicit error; pinch
/// first in that case.
pub fn quantize_commuting(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<(ClassicalSource, ClassicalSource)> {
    if rho.dim() != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    let c = commutator_max_norm(rho.op(), sigma.op());
    if c > 1e-9 {
        return Err(QhtError::NonCommuting { commutator: c });
    }
    let diags = simultaneous_diagonalize(&[sigma.op(), rho.op()])?;
    let q = normalize_probs(&diags[0]);
    let p = normalize_probs(&diags[1]);
    Ok((ClassicalSource::iid(&p, 1)?, ClassicalSource::iid(&q, 1)?))
}

pub(crate) fn normalize_probs(values: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|&v| v / total).collect()
}
