use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Mat;

use super::{logreg_make, matfact_make, sigmoid, LogisticRegression, MatrixLeastSquares};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Seeded synthetic logistic regression: standard-normal features, labels
/// drawn from a fixed linear teacher `σ(xᵀw*)` (so the dataset is noisy but
/// structured). Deterministic for a given `(n, d, seed)`.
pub fn synthetic_logreg(n: usize, d: usize, reg: f64, seed: u64) -> LogisticRegression {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher: Vec<f64> = (0..d).map(|_| 1.5 * normal(&mut rng)).collect();
    let x = Mat::from_fn(n, d, |_, _| normal(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let z: f64 = (0..d).map(|j| teacher[j] * x[(i, j)]).sum();
            let flip: f64 = rng.gen();
            if flip < sigmoid(z) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    logreg_make(x, y, reg).expect("synthetic labels are 0/1 by construction")
}

/// Seeded matrix least-squares instance: targets come from a fixed teacher
/// matrix plus Gaussian noise, so the optimal loss is strictly positive for
/// `noise > 0` and `n > d`.
pub fn synthetic_matfact(p: usize, d: usize, n: usize, noise: f64, seed: u64) -> MatrixLeastSquares {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher = Mat::from_fn(p, d, |_, _| normal(&mut rng));
    let x = Mat::from_fn(d, n, |_, _| normal(&mut rng));
    let clean = teacher.matmul(&x);
    let y = Mat::from_fn(p, n, |i, j| clean[(i, j)] + noise * normal(&mut rng));
    matfact_make(x, y).expect("columns match by construction")
}
