use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    for d in [4usize, 8, 16, 32, 64, 128, 256] {
        let mut worst = 0.0f64;
        let mut worst_gram = 0.0f64;
        for _ in 0..5 {
            let mut m = DMatrix::<Complex64>::zeros(d, d);
            for i in 0..d { for j in 0..d {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                m[(i,j)] = Complex64::new(re, im);
            }}
            let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let scale = h.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let e = nalgebra::linalg::SymmetricEigen::new(h.clone());
            let mut scaled = e.eigenvectors.clone();
            for (j, l) in e.eigenvalues.iter().enumerate() {
                for i in 0..d { scaled[(i,j)] *= Complex64::new(*l, 0.0); }
            }
            let resid = (&scaled * e.eigenvectors.adjoint() - &h).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let gram = (e.eigenvectors.adjoint() * &e.eigenvectors - DMatrix::<Complex64>::identity(d,d)).iter().fold(0.0f64, |a,z| a.max(z.norm()));
            worst = worst.max(resid / scale);
            worst_gram = worst_gram.max(gram);
        }
        println!("dim {d}: worst rel residual {worst:.3e}, worst gram dev {worst_gram:.3e}");
    }
}
