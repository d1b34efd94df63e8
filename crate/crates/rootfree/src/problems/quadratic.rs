use crate::linalg::{cholesky, dot, spd_solve, LinalgError, Mat};

use super::{Problem, ProblemError, Reduction, Result};

/// Convex quadratic `ℓ(μ) = ½ μᵀQμ - bᵀμ` with SPD `Q`, treated as a single
/// sample (`N = 1`).
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: Mat,
    b: Vec<f64>,
    optimum: f64,
    reduction: Reduction,
}

/// Build a quadratic problem; rejects non-SPD `Q`.
pub fn quadratic_make(q: Mat, b: Vec<f64>) -> Result<Quadratic> {
    if !q.is_square() || q.rows() != b.len() {
        return Err(ProblemError::ShapeMismatch(format!(
            "Q is {}x{}, b has length {}",
            q.rows(),
            q.cols(),
            b.len()
        )));
    }
    match cholesky(&q) {
        Ok(_) => {}
        Err(LinalgError::NotPositiveDefinite { eigenvalue }) => {
            return Err(ProblemError::NotPositiveDefinite { eigenvalue })
        }
        Err(e) => return Err(ProblemError::ShapeMismatch(e.to_string())),
    }
    // Optimum at μ* = Q⁻¹ b: ℓ(μ*) = -½ bᵀ Q⁻¹ b.
    let mu_star = spd_solve(&q, &b).expect("Q verified SPD");
    let optimum = 0.5 * dot(&q.matvec(&mu_star), &mu_star) - dot(&b, &mu_star);
    Ok(Quadratic {
        q,
        b,
        optimum,
        reduction: Reduction::Sum,
    })
}

impl Quadratic {
    pub fn with_reduction(mut self, r: Reduction) -> Self {
        self.reduction = r;
        self
    }

    pub fn matrix(&self) -> &Mat {
        &self.q
    }

    /// Largest eigenvalue bound via the Frobenius norm (used to pick stable
    /// step sizes in tests).
    pub fn curvature_bound(&self) -> f64 {
        self.q.fro_norm()
    }
}

impl Problem for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn num_samples(&self) -> usize {
        1
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn per_sample_loss(&self, mu: &[f64], _i: usize) -> f64 {
        0.5 * dot(&self.q.matvec(mu), mu) - dot(&self.b, mu)
    }

    fn per_sample_grad(&self, mu: &[f64], _i: usize) -> Vec<f64> {
        let mut g = self.q.matvec(mu);
        for (gk, bk) in g.iter_mut().zip(&self.b) {
            *gk -= bk;
        }
        g
    }

    fn optimum_ref(&self) -> Option<f64> {
        Some(self.optimum)
    }
}
