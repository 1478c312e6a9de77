//! Cross-module property harness: seeded randomized trials for every
//! inequality-level claim, with machine-readable pass/fail reports.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::operator::{eig, CMatrix, DensityMatrix, HermitianOperator, TestOperator};

/// Seeded Gaussian complex matrix.
fn random_gaussian(rng: &mut ChaCha12Rng, d: usize) -> CMatrix {
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = Complex64::new(re, im);
        }
    }
    g
}

/// Random full-rank-ish density matrix `G G† / Tr[G G†]` (Wishart-style).
pub fn random_density(rng: &mut ChaCha12Rng, d: usize) -> DensityMatrix {
    let g = random_gaussian(rng, d);
    let w = &g * g.adjoint();
    DensityMatrix::from_matrix(w).expect("Wishart construction is PSD")
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian(rng: &mut ChaCha12Rng, d: usize) -> HermitianOperator {
    let g = random_gaussian(rng, d);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    HermitianOperator::new(h).expect("symmetrized input")
}

/// Random test operator: a random Hermitian with its spectrum rescaled into [0, 1].
pub fn random_test(rng: &mut ChaCha12Rng, d: usize) -> TestOperator {
    let h = random_hermitian(rng, d);
    let sys = eig(&h).expect("random Hermitian decomposes");
    let lo = sys.eigenvalues[0];
    let hi = sys.eigenvalues[d - 1];
    let span = (hi - lo).max(1e-12);
    TestOperator::trusted(sys.rebuild_with(|l| (l - lo) / span))
}

/// Random orthogonal projection of rank `1..dim`.
pub fn random_projection(rng: &mut ChaCha12Rng, d: usize) -> TestOperator {
    let h = random_hermitian(rng, d);
    let sys = eig(&h).expect("random Hermitian decomposes");
    let rank = rng.gen_range(1..d.max(2));
    let cut = sys.eigenvalues[d - rank];
    sys.projection_where(|l| l >= cut)
}

/// Dimension mix for randomized trials: 60% qubits, 30% qutrits, 10% dim 4.
pub fn random_dim(rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.gen();
    if u < 0.6 {
        2
    } else if u < 0.9 {
        3
    } else {
        4
    }
}
