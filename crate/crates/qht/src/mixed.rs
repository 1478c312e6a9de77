//! Mixed sources `ρ_n = Σ_i p_i ρ̄_i^{⊗n}`: construction, the worst-component
//! exponent, the ε-step exponent formula, and the jump demonstration
//! comparing finite-`n` measurements with the step predictions.

use serde::{Deserialize, Serialize};

use crate::classical::{
    classical_optimal_beta, simultaneous_diagonalize, sup_rate_with_budget, ClassicalSource,
};
use crate::composite::{regularized_divergence_estimate, AlternativeSet};
use crate::error::{QhtError, Result};
use crate::np::{optimal_beta, relative_entropy};
use crate::operator::{
    commutator_max_norm, tensor_power, DensityMatrix, HermitianOperator, MatrixJson,
};
use crate::DEFAULT_MAX_DIM;

/// One mixture component: positive weight and base state.
#[derive(Clone, Debug)]
pub struct MixedComponent {
    pub weight: f64,
    pub state: DensityMatrix,
}

/// A finite mixture of IID sources: weights `p_i > 0` summing to one and base
/// states `ρ̄_i` of equal dimension.
#[derive(Clone, Debug)]
pub struct MixedSourceSpec {
    components: Vec<MixedComponent>,
}

/// JSON form: `{"components": [{"p": w, "state": matrix JSON}, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedSourceJson {
    pub components: Vec<MixedComponentJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedComponentJson {
    pub p: f64,
    pub state: MatrixJson,
}

impl MixedSourceSpec {
    pub fn new(components: Vec<MixedComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(QhtError::Empty("mixed source needs at least one component".into()));
        }
        let dim = components[0].state.dim();
        let mut total = 0.0;
        for c in &components {
            if c.weight <= 0.0 {
                return Err(QhtError::BadParameter(format!(
                    "component weight {} must be positive",
                    c.weight
                )));
            }
            if c.state.dim() != dim {
                return Err(QhtError::DimensionMismatch { left: dim, right: c.state.dim() });
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(QhtError::BadParameter(format!(
                "component weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    pub fn from_weighted_states(pairs: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(weight, state)| MixedComponent { weight, state })
                .collect(),
        )
    }

    pub fn components(&self) -> &[MixedComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].state.dim()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// True when all component states and `sigma` commute pairwise within 1e-9.
    pub fn commutes_with(&self, sigma: &DensityMatrix) -> bool {
        let states: Vec<&DensityMatrix> =
            self.components.iter().map(|c| &c.state).collect();
        for (i, a) in states.iter().enumerate() {
            if commutator_max_norm(a.op(), sigma.op()) > 1e-9 {
                return false;
            }
            for b in states.iter().skip(i + 1) {
                if commutator_max_norm(a.op(), b.op()) > 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_json(&self) -> MixedSourceJson {
        MixedSourceJson {
            components: self
                .components
                .iter()
                .map(|c| MixedComponentJson {
                    p: c.weight,
                    state: MatrixJson::from_operator(c.state.op()),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &MixedSourceJson) -> Result<Self> {
        let components = json
            .components
            .iter()
            .map(|c| {
                Ok(MixedComponent { weight: c.p, state: c.state.to_density()? })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }
}

/// The mixed state `ρ_n = Σ_i p_i ρ̄_i^{⊗n}` as a dense density matrix.
///
/// Emits a warning when the component count reaches `e^{n/10}`: subexponential
/// mixture sizes are the regime where the worst-component characterization is
/// meaningful.
pub fn mixed_state(spec: &MixedSourceSpec, n: u32) -> Result<DensityMatrix> {
    let count = spec.len() as f64;
    if count >= (n as f64 / 10.0).exp() {
        log::warn!(
            "mixed source has {} components at blocklength {n}; exponential-size mixtures \
             break the worst-component characterization",
            spec.len()
        );
    }
    let mut acc = HermitianOperator::zeros(
        spec.dim()
            .checked_pow(n)
            .filter(|&d| d <= DEFAULT_MAX_DIM)
            .ok_or(QhtError::DimensionOverflow {
                dim: spec.dim(),
                power: n,
                max_dim: DEFAULT_MAX_DIM,
            })?,
    );
    for c in &spec.components {
        let power = tensor_power(&c.state, n)?;
        acc = HermitianOperator::lin_comb(1.0, &acc, c.weight, power.op())?;
    }
    DensityMatrix::trusted(acc)
}

/// Step function `R ↦ Σ_{i: d_i ≤ R} p_i` with its evaluation rule
/// `B(ε) = sup{R : Σ_{d_i ≤ R} p_i ≤ ε}`.
#[derive(Clone, Debug, Serialize)]
pub struct StepFunctionExponent {
    /// `(d_i, cumulative weight up to and including d_i)`, thresholds
    /// ascending, duplicates merged; cumulative weights end at one.
    pub thresholds: Vec<(f64, f64)>,
}

impl StepFunctionExponent {
    /// Builds the step function from per-component `(d_i, p_i)` pairs.
    /// Components with identical `d_i` (within 1e-12) are merged.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(QhtError::Empty("step function needs components".into()));
        }
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN divergences"));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (d, p) in sorted {
            match merged.last_mut() {
                Some(last) if d.is_finite() && (d - last.0).abs() <= 1e-12 => last.1 += p,
                _ => merged.push((d, p)),
            }
        }
        let mut cum = 0.0;
        let thresholds = merged
            .into_iter()
            .map(|(d, p)| {
                cum += p;
                (d, cum)
            })
            .collect();
        Ok(Self { thresholds })
    }

    /// `sup{R : Σ_{d_i ≤ R} p_i ≤ ε}`. The constraint is closed: cumulative
    /// weights within 1e-12 of ε count as `≤ ε`.
    pub fn evaluate(&self, epsilon: f64) -> Result<f64> {
        let mut pairs = Vec::with_capacity(self.thresholds.len());
        let mut prev = 0.0;
        for &(d, cum) in &self.thresholds {
            pairs.push((d, cum - prev));
            prev = cum;
        }
        sup_rate_with_budget(&pairs, epsilon)
    }

    /// The jump locations: cumulative weights where the exponent changes.
    pub fn jump_points(&self) -> Vec<f64> {
        self.thresholds.iter().map(|&(_, cum)| cum).collect()
    }
}

/// The step function of a mixed source against an IID alternative, with
/// `d_i = D(ρ̄_i‖σ)`.
pub fn step_function(spec: &MixedSourceSpec, sigma: &DensityMatrix) -> Result<StepFunctionExponent> {
    let pairs = spec
        .components
        .iter()
        .map(|c| Ok((relative_entropy(&c.state, sigma)?, c.weight)))
        .collect::<Result<Vec<_>>>()?;
    StepFunctionExponent::from_pairs(&pairs)
}

/// ε-step exponent `B(ε|ρ⃗‖σ⃗) = sup{R : Σ_{i: d_i ≤ R} p_i ≤ ε}` in nats.
/// Components with `d_i = +∞` never enter any finite sum; `ε ≥ 1` is rejected.
pub fn step_exponent(spec: &MixedSourceSpec, sigma: &DensityMatrix, epsilon: f64) -> Result<f64> {
    step_function(spec, sigma)?.evaluate(epsilon)
}

/// Per-component series of the worst-component exponent computation.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentSeries {
    pub index: usize,
    /// `(n, value/n)` rows from the regularized divergence estimate.
    pub series: Vec<(u32, f64)>,
    pub final_value: f64,
}

/// Result of the worst-component exponent estimate.
#[derive(Clone, Debug, Serialize)]
pub struct WorstComponentResult {
    /// Minimum over components of the final-`n` regularized value.
    pub value: f64,
    pub argmin_index: usize,
    pub per_component: Vec<ComponentSeries>,
    /// Components whose divergence is `+∞` against the whole hull (excluded
    /// from the minimum).
    pub excluded: Vec<usize>,
}

/// `min_i (1/n) min_{σ_n} D(ρ̄_i^{⊗n}‖σ_n)` at the largest feasible `n`,
/// with the per-component series reported.
pub fn worst_component_exponent(
    spec: &MixedSourceSpec,
    alt: &AlternativeSet,
    n_max: u32,
) -> Result<WorstComponentResult> {
    let mut per_component = Vec::with_capacity(spec.len());
    let mut excluded = Vec::new();
    for (index, c) in spec.components.iter().enumerate() {
        let series = regularized_divergence_estimate(&c.state, alt, n_max)?;
        let final_value = series.last().map(|&(_, v)| v).unwrap_or(f64::INFINITY);
        if !final_value.is_finite() {
            excluded.push(index);
        }
        per_component.push(ComponentSeries { index, series, final_value });
    }
    let (argmin_index, value) = per_component
        .iter()
        .filter(|c| c.final_value.is_finite())
        .map(|c| (c.index, c.final_value))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite values"))
        .ok_or(QhtError::SupportDeficient)?;
    Ok(WorstComponentResult { value, argmin_index, per_component, excluded })
}

/// One row of the jump demonstration: measured finite-`n` exponent against
/// the step-function prediction.
#[derive(Clone, Debug, Serialize)]
pub struct JumpDemoRow {
    pub epsilon: f64,
    pub n: u32,
    pub measured_exponent: f64,
    pub predicted_exponent: f64,
}

/// Compares finite-`n` measured exponents `−(1/n) log β_ε(ρ_n‖σ^{⊗n})` with
/// the step-exponent prediction across an ε grid.
///
/// Requires a two-component source with `D(ρ̄₁‖σ) < D(ρ̄₂‖σ)`. Commuting
/// fixtures route through the exact classical oracle (any `n`); non-commuting
/// ones run the quantum Neyman–Pearson path under the dimension cap.
pub fn jump_demo(
    spec: &MixedSourceSpec,
    sigma: &DensityMatrix,
    epsilon_grid: &[f64],
    n: u32,
) -> Result<Vec<JumpDemoRow>> {
    if spec.len() != 2 {
        return Err(QhtError::BadParameter(format!(
            "jump demo expects exactly two components, got {}",
            spec.len()
        )));
    }
    let d1 = relative_entropy(&spec.components[0].state, sigma)?;
    let d2 = relative_entropy(&spec.components[1].state, sigma)?;
    if !(d1 < d2) {
        return Err(QhtError::BadParameter(format!(
            "jump demo requires D(rho1||sigma) < D(rho2||sigma), got {d1} vs {d2}"
        )));
    }
    if epsilon_grid.is_empty() {
        return Err(QhtError::Empty("epsilon grid".into()));
    }

    let mut rows = Vec::with_capacity(epsilon_grid.len());
    for &eps in epsilon_grid {
        let measured = measured_exponent(spec, sigma, eps, n)?;
        let predicted = step_exponent(spec, sigma, eps)?;
        rows.push(JumpDemoRow { epsilon: eps, n, measured_exponent: measured, predicted_exponent: predicted });
    }
    Ok(rows)
}

/// `−(1/n) log β_ε(ρ_n‖σ^{⊗n})`, routed to the classical oracle for commuting
/// fixtures and to the quantum path otherwise.
pub fn measured_exponent(
    spec: &MixedSourceSpec,
    sigma: &DensityMatrix,
    epsilon: f64,
    n: u32,
) -> Result<f64> {
    if spec.commutes_with(sigma) {
        let (p, q) = classical_mixture_sources(spec, sigma, n as u64)?;
        let (beta_log, _, _) = classical_optimal_beta(&p, &q, epsilon)?;
        return Ok(-beta_log / n as f64);
    }
    if spec.dim().checked_pow(n).filter(|&d| d <= DEFAULT_MAX_DIM).is_none() {
        let max_n = max_feasible_blocklength(spec.dim());
        return Err(QhtError::BadParameter(format!(
            "non-commuting fixture at blocklength {n} exceeds the dense cap; \
             max feasible n is {max_n}"
        )));
    }
    let rho_n = mixed_state(spec, n)?;
    let sigma_n = tensor_power(sigma, n)?;
    let r = optimal_beta(&rho_n, &sigma_n, epsilon)?;
    Ok(-r.beta.ln() / n as f64)
}

/// Largest `n` with `dim^n ≤ DEFAULT_MAX_DIM`.
pub fn max_feasible_blocklength(dim: usize) -> u32 {
    let mut n = 0u32;
    let mut total = 1usize;
    while total.checked_mul(dim).map(|t| t <= DEFAULT_MAX_DIM).unwrap_or(false) {
        total *= dim;
        n += 1;
    }
    n
}

/// Simultaneous classical reduction of a commuting mixed source and IID
/// alternative at blocklength `n`: the null becomes a mixture of IID
/// components over the joint eigenbasis alphabet.
pub fn classical_mixture_sources(
    spec: &MixedSourceSpec,
    sigma: &DensityMatrix,
    n: u64,
) -> Result<(ClassicalSource, ClassicalSource)> {
    let mut ops = vec![sigma.op()];
    for c in &spec.components {
        ops.push(c.state.op());
    }
    let diags = simultaneous_diagonalize(&ops)?;
    let q_probs = crate::classical::normalize_probs(&diags[0]);
    let alphabet = q_probs.len();
    let components: Vec<(f64, Vec<f64>)> = spec
        .components
        .iter()
        .zip(diags[1..].iter())
        .map(|(c, d)| (c.weight, crate::classical::normalize_probs(d)))
        .collect();
    let p = ClassicalSource::new(alphabet, &components, n)?;
    let q = ClassicalSource::iid(&q_probs, n)?;
    Ok((p, q))
}
