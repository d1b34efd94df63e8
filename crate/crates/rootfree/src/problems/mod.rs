//! Differentiable desk-scale test problems with per-sample gradient oracles.
//!
//! Each problem exposes the summed objective `ℓ(μ) = Σ_i c_i(μ)` through
//! per-sample losses and gradients; [`batch_grad`] aggregates them according
//! to the problem's reduction (sum or mean). [`finite_diff_grad`] is the
//! independent central-difference oracle used throughout the test suites.

mod logreg;
mod matfact;
mod quadratic;
mod synthetic;

pub use logreg::{logreg_from_csv, logreg_make, LogisticRegression};
pub use matfact::{matfact_make, MatrixLeastSquares};
pub use quadratic::{quadratic_make, Quadratic};
pub use synthetic::{synthetic_logreg, synthetic_matfact};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("label at sample {index} is {value}, expected 0 or 1")]
    BadLabel { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("quadratic matrix is not positive definite (eigenvalue {eigenvalue:.6e})")]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batch index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("batch indices contain a duplicate: {index}")]
    DuplicateIndex { index: usize },
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// How multi-sample losses and gradients aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

impl Reduction {
    pub fn by_name(name: &str) -> Option<Reduction> {
        match name {
            "sum" => Some(Reduction::Sum),
            "mean" => Some(Reduction::Mean),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Reduction::Sum => "sum",
            Reduction::Mean => "mean",
        }
    }
}

/// A mini-batch: a set of distinct sample indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    indices: Vec<usize>,
}

impl Batch {
    /// Validates that indices are distinct and within `[0, n)`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Batch> {
        if indices.is_empty() {
            return Err(ProblemError::EmptyBatch);
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(ProblemError::IndexOutOfRange { index: i, n });
            }
            if seen[i] {
                return Err(ProblemError::DuplicateIndex { index: i });
            }
            seen[i] = true;
        }
        Ok(Batch { indices })
    }

    /// The full-batch `{0, .., n-1}`.
    pub fn full(n: usize) -> Batch {
        Batch {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// A differentiable objective with per-sample structure.
///
/// `per_sample_loss`/`per_sample_grad` refer to the unreduced summands
/// `c_i(μ)`; `loss` and [`batch_grad`] apply the reduction.
pub trait Problem {
    /// Number of parameters.
    fn dim(&self) -> usize;

    /// Number of samples `N`.
    fn num_samples(&self) -> usize;

    fn reduction(&self) -> Reduction;

    /// Loss contribution of sample `i` (before reduction).
    fn per_sample_loss(&self, mu: &[f64], i: usize) -> f64;

    /// Gradient of sample `i`'s loss contribution.
    fn per_sample_grad(&self, mu: &[f64], i: usize) -> Vec<f64>;

    /// Reduced loss over a subset of samples.
    fn loss(&self, mu: &[f64], subset: &[usize]) -> f64 {
        let total: f64 = subset.iter().map(|&i| self.per_sample_loss(mu, i)).sum();
        match self.reduction() {
            Reduction::Sum => total,
            Reduction::Mean => total / subset.len() as f64,
        }
    }

    /// Reduced loss over all samples.
    fn full_loss(&self, mu: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.num_samples()).collect();
        self.loss(mu, &all)
    }

    /// Known optimal value of the reduced full-batch loss, if available.
    fn optimum_ref(&self) -> Option<f64> {
        None
    }

    /// Shape `(p, d)` used when a matrix-preconditioned method reshapes the
    /// flattened parameter vector row-major into `p x d`.
    fn mat_shape(&self) -> (usize, usize) {
        (self.dim(), 1)
    }

    /// For discrete-label problems: the label distribution at sample `i`,
    /// as `(probability, score)` pairs where the score is
    /// `∇_μ log p(y | x_i; μ)` of the normalized label model.
    fn label_enumeration(&self, _mu: &[f64], _i: usize) -> Option<Vec<(f64, Vec<f64>)>> {
        None
    }
}

/// Reduced gradient over a batch: sum of per-sample gradients, divided by the
/// batch size in mean mode.
pub fn batch_grad(p: &dyn Problem, mu: &[f64], batch: &Batch) -> Result<Vec<f64>> {
    if batch.size() == 0 {
        return Err(ProblemError::EmptyBatch);
    }
    let mut g = vec![0.0; p.dim()];
    for &i in batch.indices() {
        let gi = p.per_sample_grad(mu, i);
        for (acc, v) in g.iter_mut().zip(&gi) {
            *acc += v;
        }
    }
    if p.reduction() == Reduction::Mean {
        let inv = 1.0 / batch.size() as f64;
        for v in &mut g {
            *v *= inv;
        }
    }
    Ok(g)
}

/// Central-difference gradient of the reduced subset loss:
/// `(loss(μ + h e_k) - loss(μ - h e_k)) / 2h` per coordinate.
pub fn finite_diff_grad(p: &dyn Problem, mu: &[f64], subset: &[usize], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite difference step must be positive");
    let mut g = vec![0.0; mu.len()];
    let mut point = mu.to_vec();
    for k in 0..mu.len() {
        let orig = point[k];
        point[k] = orig + h;
        let plus = p.loss(&point, subset);
        point[k] = orig - h;
        let minus = p.loss(&point, subset);
        point[k] = orig;
        g[k] = (plus - minus) / (2.0 * h);
    }
    g
}

/// Numerically stable logistic sigmoid.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^z)`.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use approx::assert_relative_eq;

    #[test]
    fn batch_validation() {
        assert!(matches!(Batch::new(vec![], 5), Err(ProblemError::EmptyBatch)));
        assert!(matches!(
            Batch::new(vec![5], 5),
            Err(ProblemError::IndexOutOfRange { index: 5, n: 5 })
        ));
        assert!(matches!(
            Batch::new(vec![1, 1], 5),
            Err(ProblemError::DuplicateIndex { index: 1 })
        ));
        assert_eq!(Batch::full(3).indices(), &[0, 1, 2]);
    }

    #[test]
    fn sigmoid_is_stable_in_the_tails() {
        assert_relative_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0);
        assert!(sigmoid(-800.0) == 0.0);
        assert!(softplus(800.0).is_finite());
        assert_relative_eq!(softplus(0.0), std::f64::consts::LN_2, max_relative = 1e-15);
    }

    #[test]
    fn mean_loss_is_sum_loss_over_subset_size() {
        let q = Mat::diag(&[2.0, 3.0]);
        let sum = quadratic_make(q.clone(), vec![0.0, 0.0]).unwrap();
        let mean = sum.clone().with_reduction(Reduction::Mean);
        let mu = [1.0, -2.0];
        let subset = [0usize];
        assert_relative_eq!(
            mean.loss(&mu, &subset),
            sum.loss(&mu, &subset) / subset.len() as f64
        );
    }

    #[test]
    fn single_sample_batch_grad_equals_per_sample_grad() {
        let q = Mat::diag(&[1.0, 1.0]);
        let p = quadratic_make(q, vec![0.5, -0.5]).unwrap();
        let mu = [2.0, 3.0];
        let b = Batch::new(vec![0], 1).unwrap();
        assert_eq!(batch_grad(&p, &mu, &b).unwrap(), p.per_sample_grad(&mu, 0));
    }

    #[test]
    fn mean_mode_divides_sum_mode_by_batch_size() {
        let p = synthetic_logreg(6, 3, 0.0, 99);
        let pm = p.clone().with_reduction(Reduction::Mean);
        let mu = vec![0.1, -0.2, 0.3];
        let b = Batch::full(6);
        let gs = batch_grad(&p, &mu, &b).unwrap();
        let gm = batch_grad(&pm, &mu, &b).unwrap();
        for (s, m) in gs.iter().zip(&gm) {
            assert_relative_eq!(s / 6.0, m, epsilon = 1e-15);
        }
    }

    #[test]
    fn sum_of_per_sample_grads_matches_sum_mode_batch_grad() {
        let p = synthetic_logreg(8, 4, 0.1, 5);
        let mu = vec![0.3, 0.1, -0.4, 0.2];
        let b = Batch::full(8);
        let g = batch_grad(&p, &mu, &b).unwrap();
        let mut manual = vec![0.0; 4];
        for i in 0..8 {
            for (acc, v) in manual.iter_mut().zip(p.per_sample_grad(&mu, i)) {
                *acc += v;
            }
        }
        for (a, b) in g.iter().zip(&manual) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn finite_diff_is_exact_on_quadratics() {
        let q = Mat::identity(2);
        let p = quadratic_make(q, vec![0.0, 0.0]).unwrap();
        let mu = [1.0, 2.0];
        let fd = finite_diff_grad(&p, &mu, &[0], 1e-3);
        let g = p.per_sample_grad(&mu, 0);
        for (a, b) in fd.iter().zip(&g) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn finite_diff_error_is_second_order_on_logreg() {
        let p = synthetic_logreg(10, 3, 0.0, 17);
        let mu = vec![0.4, -0.3, 0.2];
        let subset: Vec<usize> = (0..10).collect();
        let exact = batch_grad(&p, &mu, &Batch::full(10)).unwrap();
        let err = |h: f64| -> f64 {
            let fd = finite_diff_grad(&p, &mu, &subset, h);
            fd.iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}
