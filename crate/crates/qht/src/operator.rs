//! Dense Hermitian linear algebra: validated operator types, eigendecomposition,
//! spectral projections, operator functions, tensor powers, and the pinching map.
//!
//! All operators are stored as dense complex matrices. Matrices whose
//! off-diagonal entries are exactly zero are tracked with a `diag` flag and
//! routed through elementwise fast paths, which keeps commuting fixtures
//! cheap up to the dimension cap.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QhtError, Result};
use crate::DEFAULT_MAX_DIM;

/// Dense complex matrix carrier.
pub type CMatrix = DMatrix<Complex64>;

/// Relative factor for the Hermiticity validation tolerance (`× ‖M‖_max`).
pub const HERM_TOL_FACTOR: f64 = 1e-12;
/// Absolute tolerance below which negative density eigenvalues are clipped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Absolute tolerance for the test-operator spectrum `[0, 1]`.
pub const TEST_TOL: f64 = 1e-10;
/// Relative factor for eigenvalue clustering: `cluster_tol = 1e-8 × max(1, spectral range)`.
pub const CLUSTER_TOL_FACTOR: f64 = 1e-8;
/// Relative factor for zero classification in spectral projections
/// (`proj_tol = 1e-10 × spectral range`).
pub const PROJ_TOL_FACTOR: f64 = 1e-10;

fn max_abs_of(mat: &CMatrix) -> f64 {
    mat.iter().fold(0.0, |acc, z| acc.max(z.norm_sqr().sqrt()))
}

fn is_exactly_diagonal(mat: &CMatrix) -> bool {
    let d = mat.nrows();
    for j in 0..d {
        for i in 0..d {
            if i != j {
                let z = mat[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    return false;
                }
            }
        }
    }
    true
}

/// A validated Hermitian operator. The stored matrix is exactly Hermitian
/// after symmetrization `M ← (M + M†)/2`.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    dim: usize,
    mat: CMatrix,
    diag: bool,
}

impl HermitianOperator {
    /// Validates Hermiticity (`‖M − M†‖_max ≤ 1e-12 ‖M‖_max`) and symmetrizes.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let dim = mat.nrows();
        if dim == 0 || mat.ncols() != dim {
            return Err(QhtError::BadParameter(format!(
                "expected a nonempty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = max_abs_of(&mat);
        let tol = HERM_TOL_FACTOR * scale;
        let mut deviation: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let z = mat[(i, j)] - mat[(j, i)].conj();
                deviation = deviation.max(z.norm_sqr().sqrt());
            }
        }
        if deviation > tol {
            return Err(QhtError::NotHermitian { deviation, tol });
        }
        let mut mat = mat;
        for i in 0..dim {
            mat[(i, i)] = Complex64::new(mat[(i, i)].re, 0.0);
            for j in (i + 1)..dim {
                let avg = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
                mat[(i, j)] = avg;
                mat[(j, i)] = avg.conj();
            }
        }
        Ok(Self::new_unchecked(mat))
    }

    /// Wraps a matrix that is Hermitian by construction (exact arithmetic paths).
    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        let dim = mat.nrows();
        let diag = is_exactly_diagonal(&mat);
        Self { dim, mat, diag }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut mat = CMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { dim: d, mat, diag: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, mat: CMatrix::identity(dim, dim), diag: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, mat: CMatrix::zeros(dim, dim), diag: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn max_abs(&self) -> f64 {
        max_abs_of(&self.mat)
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        self.diag
    }

    /// The (real) diagonal, valid as the full description only for diagonal operators.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.mat[(i, i)].re).sum()
    }

    /// `ca·A + cb·B`; real coefficients keep Hermiticity exact.
    pub fn lin_comb(ca: f64, a: &Self, cb: f64, b: &Self) -> Result<Self> {
        if a.dim != b.dim {
            return Err(QhtError::DimensionMismatch { left: a.dim, right: b.dim });
        }
        let mut mat = a.mat.clone();
        mat.apply(|z| *z *= Complex64::new(ca, 0.0));
        mat.zip_apply(&b.mat, |z, w| *z += w * Complex64::new(cb, 0.0));
        Ok(Self { dim: a.dim, diag: a.diag && b.diag, mat })
    }

    /// Frobenius-style elementwise max distance between two operators.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |acc, (x, y)| acc.max((x - y).norm_sqr().sqrt()))
    }
}

/// `Tr[AB]` for Hermitian `A`, `B` (a real number).
pub fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    debug_assert_eq!(a.dim, b.dim);
    if a.diag || b.diag {
        let d = a.dim;
        return (0..d).map(|i| a.mat[(i, i)].re * b.mat[(i, i)].re).sum();
    }
    // Tr[AB] = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
    let mut acc = 0.0;
    for (x, y) in a.mat.iter().zip(b.mat.iter()) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc
}

/// `‖AB − BA‖_max`; intended for small dimensions.
pub fn commutator_max_norm(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    if a.diag && b.diag {
        return 0.0;
    }
    let ab = &a.mat * &b.mat;
    let ba = &b.mat * &a.mat;
    max_abs_of(&(ab - ba))
}

/// A density operator: PSD within `PSD_TOL` and unit trace after normalization.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    /// Validates PSD (negative eigenvalues within `PSD_TOL` are clipped to zero)
    /// and renormalizes the trace to one.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min_ev = if op.diag {
            op.diagonal_real().iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            op.mat.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        if min_ev < -PSD_TOL {
            return Err(QhtError::NotPositiveSemidefinite { min_eigenvalue: min_ev, tol: PSD_TOL });
        }
        let op = if min_ev < 0.0 {
            if op.diag {
                let clipped: Vec<f64> =
                    op.diagonal_real().iter().map(|&v| v.max(0.0)).collect();
                HermitianOperator::from_real_diagonal(&clipped)
            } else {
                let sys = eig(&op)?;
                sys.rebuild_with(|lambda| lambda.max(0.0))
            }
        } else {
            op
        };
        Self::normalized(op)
    }

    /// Internal constructor for operators that are PSD by construction
    /// (tensor powers, pinchings, mixtures of valid states).
    pub(crate) fn trusted(op: HermitianOperator) -> Result<Self> {
        Self::normalized(op)
    }

    fn normalized(mut op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !(tr.is_finite() && tr > PSD_TOL) {
            return Err(QhtError::BadTrace { trace: tr });
        }
        if (tr - 1.0).abs() > 1e-15 {
            let s = Complex64::new(1.0 / tr, 0.0);
            op.mat.apply(|z| *z *= s);
        }
        Ok(Self { op })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let v = vec![1.0 / dim as f64; dim];
        Self { op: HermitianOperator::from_real_diagonal(&v) }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op.mat
    }

    pub fn is_diagonal(&self) -> bool {
        self.op.diag
    }
}

/// A binary measurement element with spectrum in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct TestOperator {
    op: HermitianOperator,
}

impl TestOperator {
    /// Validates the spectrum within `TEST_TOL` and clips it into `[0, 1]`.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let evs: Vec<f64> = if op.diag {
            op.diagonal_real()
        } else {
            op.mat.clone().symmetric_eigenvalues().iter().cloned().collect()
        };
        let min = evs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = evs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min < -TEST_TOL || max > 1.0 + TEST_TOL {
            return Err(QhtError::NotATest { min, max });
        }
        if min >= 0.0 && max <= 1.0 {
            return Ok(Self { op });
        }
        let op = if op.diag {
            let clipped: Vec<f64> =
                op.diagonal_real().iter().map(|&v| v.clamp(0.0, 1.0)).collect();
            HermitianOperator::from_real_diagonal(&clipped)
        } else {
            eig(&op)?.rebuild_with(|lambda| lambda.clamp(0.0, 1.0))
        };
        Ok(Self { op })
    }

    /// Internal constructor for operators inside `[0, 1]` by construction
    /// (projections from orthonormal columns, convex mixtures of tests).
    pub(crate) fn trusted(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn identity(dim: usize) -> Self {
        Self { op: HermitianOperator::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { op: HermitianOperator::zeros(dim) }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op.mat
    }

    /// Complement `I − T`.
    pub fn complement(&self) -> TestOperator {
        let id = HermitianOperator::identity(self.op.dim);
        let op = HermitianOperator::lin_comb(1.0, &id, -1.0, &self.op).expect("same dim");
        Self { op }
    }
}

/// Ascending eigenvalues, unitary eigenvector columns, and the number of
/// eigenvalue clusters under the relative clustering tolerance.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub distinct_count: usize,
}

/// Cluster boundaries for an ascending eigenvalue list: a new cluster starts
/// where the gap to the previous value reaches `1e-8 × max(1, spectral range)`.
pub fn cluster_starts(ascending: &[f64]) -> Vec<usize> {
    if ascending.is_empty() {
        return Vec::new();
    }
    let range = ascending[ascending.len() - 1] - ascending[0];
    let tol = CLUSTER_TOL_FACTOR * range.max(1.0);
    let mut starts = vec![0];
    for i in 1..ascending.len() {
        if ascending[i] - ascending[i - 1] >= tol {
            starts.push(i);
        }
    }
    starts
}

impl EigenSystem {
    /// Projection onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projection_where<F: Fn(f64) -> bool>(&self, keep: F) -> TestOperator {
        let d = self.eigenvalues.len();
        let selected: Vec<usize> =
            (0..d).filter(|&i| keep(self.eigenvalues[i])).collect();
        if selected.is_empty() {
            return TestOperator::zero(d);
        }
        if selected.len() == d {
            return TestOperator::identity(d);
        }
        let cols = self.eigenvectors.select_columns(&selected);
        let p = &cols * cols.adjoint();
        TestOperator::trusted(HermitianOperator::new_unchecked(p))
    }

    /// `V diag(f(λ)) V†`.
    pub fn rebuild_with<F: Fn(f64) -> f64>(&self, f: F) -> HermitianOperator {
        let d = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let c = Complex64::new(f(lambda), 0.0);
            for i in 0..d {
                scaled[(i, j)] *= c;
            }
        }
        let m = &scaled * self.eigenvectors.adjoint();
        HermitianOperator::new_unchecked(symmetrize_in_place(m))
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

pub(crate) fn symmetrize_in_place(mut m: CMatrix) -> CMatrix {
    let d = m.nrows();
    for i in 0..d {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..d {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}

/// Full eigendecomposition with ascending eigenvalues.
///
/// Diagonal operators take a sorting fast path with exact permutation
/// eigenvectors; the iterative path validates reconstruction
/// (`‖VΛV† − M‖_max ≤ 1e-9 (1 + ‖M‖_max)`) and unitarity (`‖V†V − I‖ ≤ 1e-10`).
pub fn eig(m: &HermitianOperator) -> Result<EigenSystem> {
    let d = m.dim;
    if m.diag {
        let mut pairs: Vec<(f64, usize)> =
            m.diagonal_real().into_iter().zip(0..d).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut vecs = CMatrix::zeros(d, d);
        for (col, &(_, idx)) in pairs.iter().enumerate() {
            vecs[(idx, col)] = Complex64::new(1.0, 0.0);
        }
        let distinct_count = cluster_starts(&eigenvalues).len();
        return Ok(EigenSystem { eigenvalues, eigenvectors: vecs, distinct_count });
    }

    let (mut eigenvalues, mut eigenvectors) = decompose_sorted(&m.mat, d, m.max_abs())?;

    // Reconstruction and unitarity residuals gate the result; a failing
    // decomposition gets one refinement pass (re-diagonalize V†MV, which is
    // nearly diagonal, and compose) before giving up.
    let tol = 1e-9 * (1.0 + m.max_abs());
    for attempt in 0..2 {
        let residual = reconstruction_residual(&m.mat, &eigenvalues, &eigenvectors);
        let gram = eigenvectors.adjoint() * &eigenvectors;
        let unitarity = max_abs_of(&(gram - CMatrix::identity(d, d)));
        if residual <= tol && unitarity <= 1e-10 {
            let distinct_count = cluster_starts(&eigenvalues).len();
            return Ok(EigenSystem { eigenvalues, eigenvectors, distinct_count });
        }
        if attempt == 1 {
            return Err(QhtError::EigFailure { dim: d, max_abs: m.max_abs(), residual, tol });
        }
        let compressed =
            symmetrize_in_place(eigenvectors.adjoint() * &m.mat * &eigenvectors);
        let (refined_vals, refined_vecs) = decompose_sorted(&compressed, d, m.max_abs())?;
        eigenvalues = refined_vals;
        eigenvectors = &eigenvectors * refined_vecs;
    }
    unreachable!("both attempts return");
}

fn decompose_sorted(mat: &CMatrix, d: usize, scale: f64) -> Result<(Vec<f64>, CMatrix)> {
    let decomp = SymmetricEigen::new(mat.clone());
    let raw = &decomp.eigenvalues;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(QhtError::EigFailure {
            dim: d,
            max_abs: scale,
            residual: f64::INFINITY,
            tol: 1e-9 * (1.0 + scale),
        });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let eigenvectors = decomp.eigenvectors.select_columns(&order);
    Ok((eigenvalues, eigenvectors))
}

fn reconstruction_residual(mat: &CMatrix, eigenvalues: &[f64], eigenvectors: &CMatrix) -> f64 {
    let d = eigenvalues.len();
    let mut scaled = eigenvectors.clone();
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let c = Complex64::new(lambda, 0.0);
        for i in 0..d {
            scaled[(i, j)] *= c;
        }
    }
    max_abs_of(&(&scaled * eigenvectors.adjoint() - mat))
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_only(m: &HermitianOperator) -> Vec<f64> {
    let mut evs: Vec<f64> = if m.diag {
        m.diagonal_real()
    } else {
        m.mat.clone().symmetric_eigenvalues().iter().cloned().collect()
    };
    evs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    evs
}

/// Strictly-positive and near-zero spectral projections of a Hermitian operator,
/// split at a zero tolerance (default `1e-10 × spectral range`).
#[derive(Clone, Debug)]
pub struct SignSplit {
    /// Projection onto eigenvalues `> zero_tol`.
    pub strict_pos: TestOperator,
    /// Projection onto eigenvalues within `[-zero_tol, zero_tol]`.
    pub kernel: TestOperator,
    pub zero_tol: f64,
}

impl SignSplit {
    /// Projection onto eigenvalues `≥ -zero_tol` (the closed condition `{M ≥ 0}`).
    pub fn nonneg(&self) -> TestOperator {
        let op = HermitianOperator::lin_comb(
            1.0,
            self.strict_pos.op(),
            1.0,
            self.kernel.op(),
        )
        .expect("same dim");
        TestOperator::trusted(op)
    }
}

fn default_zero_tol(range: f64) -> f64 {
    PROJ_TOL_FACTOR * range
}

/// Computes the sign split of `M`. `zero_tol` overrides the default
/// `1e-10 × spectral range` classification width.
pub fn sign_split(m: &HermitianOperator, zero_tol: Option<f64>) -> Result<SignSplit> {
    let d = m.dim;
    if m.diag {
        let diag = m.diagonal_real();
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ztol = zero_tol.unwrap_or_else(|| default_zero_tol(hi - lo));
        let mut pos = CMatrix::zeros(d, d);
        let mut ker = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            if v > ztol {
                pos[(i, i)] = Complex64::new(1.0, 0.0);
            } else if v >= -ztol {
                ker[(i, i)] = Complex64::new(1.0, 0.0);
            }
        }
        return Ok(SignSplit {
            strict_pos: TestOperator::trusted(HermitianOperator::new_unchecked(pos)),
            kernel: TestOperator::trusted(HermitianOperator::new_unchecked(ker)),
            zero_tol: ztol,
        });
    }
    let sys = eig(m)?;
    let ztol = zero_tol.unwrap_or_else(|| default_zero_tol(sys.spectral_range()));
    Ok(SignSplit {
        strict_pos: sys.projection_where(|l| l > ztol),
        kernel: sys.projection_where(|l| (-ztol..=ztol).contains(&l)),
        zero_tol: ztol,
    })
}

/// Orthogonal projection `{M ≥ 0}` onto the span of eigenvectors with
/// eigenvalue above `-proj_tol` (zero eigenvalues count as nonnegative).
pub fn positive_part_projection(m: &HermitianOperator) -> Result<TestOperator> {
    Ok(sign_split(m, None)?.nonneg())
}

/// Projection onto eigenvalues within `proj_tol` of zero.
pub fn kernel_projection(m: &HermitianOperator) -> Result<TestOperator> {
    Ok(sign_split(m, None)?.kernel)
}

/// `Tr[(M)_+] = Σ_{λ>0} λ` — the trace of the positive part.
pub fn positive_part_trace(m: &HermitianOperator) -> f64 {
    eigenvalues_only(m).iter().map(|&l| l.max(0.0)).sum()
}

/// `log ρ` on the support of `ρ` (natural log), zero on the kernel.
pub fn matrix_log_on_support(rho: &DensityMatrix) -> Result<HermitianOperator> {
    let m = rho.op();
    if m.diag {
        let vals: Vec<f64> = m
            .diagonal_real()
            .iter()
            .map(|&v| if v > PSD_TOL { v.ln() } else { 0.0 })
            .collect();
        return Ok(HermitianOperator::from_real_diagonal(&vals));
    }
    let sys = eig(m)?;
    Ok(sys.rebuild_with(|l| if l > PSD_TOL { l.ln() } else { 0.0 }))
}

/// Projection onto the support of `ρ` (eigenvalues above `PSD_TOL`).
pub fn support_projection(rho: &DensityMatrix) -> Result<TestOperator> {
    let m = rho.op();
    if m.diag {
        let d = m.dim();
        let mut p = CMatrix::zeros(d, d);
        for (i, &v) in m.diagonal_real().iter().enumerate() {
            if v > PSD_TOL {
                p[(i, i)] = Complex64::new(1.0, 0.0);
            }
        }
        return Ok(TestOperator::trusted(HermitianOperator::new_unchecked(p)));
    }
    Ok(eig(m)?.projection_where(|l| l > PSD_TOL))
}

/// `ρ^{⊗n}` with the default dimension cap.
pub fn tensor_power(rho: &DensityMatrix, n: u32) -> Result<DensityMatrix> {
    tensor_power_with_cap(rho, n, DEFAULT_MAX_DIM)
}

/// `ρ^{⊗n}` with an explicit cap on `dim^n`.
pub fn tensor_power_with_cap(
    rho: &DensityMatrix,
    n: u32,
    max_dim: usize,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(QhtError::BadParameter("tensor power requires n >= 1".into()));
    }
    let dim = rho.dim();
    match dim.checked_pow(n) {
        Some(total) if total <= max_dim => {}
        _ => return Err(QhtError::DimensionOverflow { dim, power: n, max_dim }),
    }
    let mut acc = rho.matrix().clone();
    for _ in 1..n {
        acc = acc.kronecker(rho.matrix());
    }
    DensityMatrix::trusted(HermitianOperator::new_unchecked(acc))
}

/// Pinching map `E_σ(ρ) = Σ_i Π_i ρ Π_i` over the eigenvalue clusters of `σ`.
/// Returns the pinched state and the number of distinct eigenvalues of `σ`.
pub fn pinch(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(DensityMatrix, usize)> {
    let d = rho.dim();
    if d != sigma.dim() {
        return Err(QhtError::DimensionMismatch { left: d, right: sigma.dim() });
    }
    if sigma.is_diagonal() {
        let diag = sigma.op().diagonal_real();
        let mut pairs: Vec<(f64, usize)> = diag.iter().cloned().zip(0..d).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        let sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let starts = cluster_starts(&sorted);
        let mut cluster_of = vec![0usize; d];
        let mut cluster = 0usize;
        for (pos, &(_, idx)) in pairs.iter().enumerate() {
            if cluster + 1 < starts.len() && pos >= starts[cluster + 1] {
                cluster += 1;
            }
            cluster_of[idx] = cluster;
        }
        let mut masked = rho.matrix().clone();
        for j in 0..d {
            for i in 0..d {
                if cluster_of[i] != cluster_of[j] {
                    masked[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        let pinched = DensityMatrix::trusted(HermitianOperator::new_unchecked(masked))?;
        return Ok((pinched, starts.len()));
    }

    let sys = eig(sigma.op())?;
    let starts = cluster_starts(&sys.eigenvalues);
    let mut cluster_of = vec![0usize; d];
    let mut cluster = 0usize;
    for pos in 0..d {
        if cluster + 1 < starts.len() && pos >= starts[cluster + 1] {
            cluster += 1;
        }
        cluster_of[pos] = cluster;
    }
    let rotated = sys.eigenvectors.adjoint() * rho.matrix() * &sys.eigenvectors;
    let mut masked = rotated;
    for j in 0..d {
        for i in 0..d {
            if cluster_of[i] != cluster_of[j] {
                masked[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let back = &sys.eigenvectors * masked * sys.eigenvectors.adjoint();
    let pinched = DensityMatrix::trusted(HermitianOperator::new_unchecked(symmetrize_in_place(back)))?;
    Ok((pinched, starts.len()))
}

/// Shared matrix JSON format: `{"dim": d, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let d = op.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                let z = op.matrix()[(i, j)];
                re[i][j] = z.re;
                im[i][j] = z.im;
            }
        }
        Self { dim: d, re, im }
    }

    /// Readers symmetrize and validate.
    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        let d = self.dim;
        let rows_ok = self.re.len() == d
            && self.im.len() == d
            && self.re.iter().all(|r| r.len() == d)
            && self.im.iter().all(|r| r.len() == d);
        if d == 0 || !rows_ok {
            return Err(QhtError::BadJson(format!(
                "matrix payload must be {d}x{d} in both re and im parts"
            )));
        }
        let mut mat = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = Complex64::new(self.re[i][j], self.im[i][j]);
            }
        }
        HermitianOperator::new(mat)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_hermitian()?)
    }
}
