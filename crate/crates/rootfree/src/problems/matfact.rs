use crate::linalg::Mat;

use super::{Problem, ProblemError, Reduction, Result};

/// Matrix-parameter least squares: the parameter is `W ∈ R^{p x d}`
/// (flattened row-major), and sample `j` contributes `½‖W x_j - y_j‖²`
/// with gradient `(W x_j - y_j) x_jᵀ`.
#[derive(Debug, Clone)]
pub struct MatrixLeastSquares {
    xdata: Mat,
    ytarget: Mat,
    reduction: Reduction,
}

/// Build from a `d x n` input matrix and `p x n` target matrix (one sample
/// per column).
pub fn matfact_make(xdata: Mat, ytarget: Mat) -> Result<MatrixLeastSquares> {
    if xdata.cols() != ytarget.cols() {
        return Err(ProblemError::ShapeMismatch(format!(
            "inputs have {} columns but targets have {}",
            xdata.cols(),
            ytarget.cols()
        )));
    }
    Ok(MatrixLeastSquares {
        xdata,
        ytarget,
        reduction: Reduction::Sum,
    })
}

impl MatrixLeastSquares {
    pub fn with_reduction(mut self, r: Reduction) -> Self {
        self.reduction = r;
        self
    }

    pub fn p(&self) -> usize {
        self.ytarget.rows()
    }

    pub fn d(&self) -> usize {
        self.xdata.rows()
    }

    /// Residual `W x_j - y_j` for sample `j`.
    fn residual(&self, w: &Mat, j: usize) -> Vec<f64> {
        let (p, d) = (self.p(), self.d());
        let mut r = vec![0.0; p];
        for row in 0..p {
            let mut acc = -self.ytarget[(row, j)];
            for k in 0..d {
                acc += w[(row, k)] * self.xdata[(k, j)];
            }
            r[row] = acc;
        }
        r
    }
}

impl Problem for MatrixLeastSquares {
    fn dim(&self) -> usize {
        self.p() * self.d()
    }

    fn num_samples(&self) -> usize {
        self.xdata.cols()
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn per_sample_loss(&self, mu: &[f64], j: usize) -> f64 {
        let w = Mat::from_flat(self.p(), self.d(), mu);
        let r = self.residual(&w, j);
        0.5 * r.iter().map(|v| v * v).sum::<f64>()
    }

    fn per_sample_grad(&self, mu: &[f64], j: usize) -> Vec<f64> {
        let (p, d) = (self.p(), self.d());
        let w = Mat::from_flat(p, d, mu);
        let r = self.residual(&w, j);
        let mut g = vec![0.0; p * d];
        for row in 0..p {
            for k in 0..d {
                g[row * d + k] = r[row] * self.xdata[(k, j)];
            }
        }
        g
    }

    fn mat_shape(&self) -> (usize, usize) {
        (self.p(), self.d())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{batch_grad, finite_diff_grad, synthetic_matfact, Batch};
    use approx::assert_relative_eq;

    #[test]
    fn zero_weights_unit_data_gradient() {
        // W = 0, single column x = e1, y = e1 (p = d = 2): gradient -e1 e1ᵀ.
        let x = Mat::from_rows(&[&[1.0], &[0.0]]);
        let y = Mat::from_rows(&[&[1.0], &[0.0]]);
        let p = matfact_make(x, y).unwrap();
        let g = p.per_sample_grad(&[0.0; 4], 0);
        assert_eq!(g, vec![-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn exact_solution_has_zero_gradient() {
        // W = [[1, 2], [0, 1]], targets generated consistently.
        let w = Mat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let x = Mat::from_rows(&[&[1.0, 0.5, -1.0], &[0.0, 2.0, 1.0]]);
        let y = w.matmul(&x);
        let p = matfact_make(x, y).unwrap();
        let flat = w.to_flat();
        for j in 0..3 {
            for v in p.per_sample_grad(&flat, j) {
                assert!(v.abs() <= 1e-14);
            }
            assert!(p.per_sample_loss(&flat, j) <= 1e-28);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = Mat::zeros(2, 3);
        let y = Mat::zeros(2, 4);
        assert!(matches!(
            matfact_make(x, y),
            Err(ProblemError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = synthetic_matfact(4, 3, 6, 0.2, 23);
        assert_eq!(p.mat_shape(), (4, 3));
        let mu: Vec<f64> = (0..12).map(|i| 0.1 * (i as f64) - 0.5).collect();
        let subset: Vec<usize> = (0..6).collect();
        let g = batch_grad(&p, &mu, &Batch::full(6)).unwrap();
        let fd = finite_diff_grad(&p, &mu, &subset, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert_relative_eq!(a, b, max_relative = 1e-6, epsilon = 1e-9);
        }
    }
}
