use std::path::Path;

use crate::linalg::{dot, Mat};

use super::{sigmoid, softplus, Problem, ProblemError, Reduction, Result};

/// ℓ2-regularized binary logistic regression with per-sample cross-entropy
/// losses. Sample `i` contributes
/// `softplus(μᵀx_i) - y_i μᵀx_i + (reg/2)‖μ‖²/N`; the regularizer is divided
/// by `N` so sum and mean reductions stay consistent.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    x: Mat,
    y: Vec<f64>,
    reg: f64,
    reduction: Reduction,
    mat_shape: (usize, usize),
}

/// Build a logistic regression problem from a data matrix (one row per
/// sample) and 0/1 labels.
pub fn logreg_make(x: Mat, y: Vec<f64>, reg: f64) -> Result<LogisticRegression> {
    if x.rows() != y.len() {
        return Err(ProblemError::ShapeMismatch(format!(
            "data has {} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    for (i, &label) in y.iter().enumerate() {
        if label != 0.0 && label != 1.0 {
            return Err(ProblemError::BadLabel {
                index: i,
                value: label,
            });
        }
    }
    let dim = x.cols();
    Ok(LogisticRegression {
        x,
        y,
        reg,
        reduction: Reduction::Sum,
        mat_shape: (dim, 1),
    })
}

impl LogisticRegression {
    pub fn with_reduction(mut self, r: Reduction) -> Self {
        self.reduction = r;
        self
    }

    /// Override the row-major reshape used by matrix-preconditioned methods.
    pub fn with_mat_shape(mut self, p: usize, d: usize) -> Result<Self> {
        if p * d != self.dim() {
            return Err(ProblemError::ShapeMismatch(format!(
                "mat shape {p}x{d} does not cover {} parameters",
                self.dim()
            )));
        }
        self.mat_shape = (p, d);
        Ok(self)
    }

    fn logit(&self, mu: &[f64], i: usize) -> f64 {
        let mut z = 0.0;
        for j in 0..self.x.cols() {
            z += mu[j] * self.x[(i, j)];
        }
        z
    }
}

impl Problem for LogisticRegression {
    fn dim(&self) -> usize {
        self.x.cols()
    }

    fn num_samples(&self) -> usize {
        self.y.len()
    }

    fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn per_sample_loss(&self, mu: &[f64], i: usize) -> f64 {
        let z = self.logit(mu, i);
        let n = self.num_samples() as f64;
        softplus(z) - self.y[i] * z + 0.5 * self.reg * dot(mu, mu) / n
    }

    fn per_sample_grad(&self, mu: &[f64], i: usize) -> Vec<f64> {
        let z = self.logit(mu, i);
        let coeff = sigmoid(z) - self.y[i];
        let n = self.num_samples() as f64;
        (0..self.dim())
            .map(|j| coeff * self.x[(i, j)] + self.reg * mu[j] / n)
            .collect()
    }

    fn mat_shape(&self) -> (usize, usize) {
        self.mat_shape
    }

    /// Bernoulli label model: scores of the normalized distribution
    /// `p(1|x) = σ(μᵀx)`. The regularizer is not part of the label model.
    fn label_enumeration(&self, mu: &[f64], i: usize) -> Option<Vec<(f64, Vec<f64>)>> {
        let z = self.logit(mu, i);
        let p1 = sigmoid(z);
        let score = |c: f64| -> Vec<f64> { (0..self.dim()).map(|j| c * self.x[(i, j)]).collect() };
        // ∇ log p(0|x) = -σ·x, ∇ log p(1|x) = (1-σ)·x.
        Some(vec![(1.0 - p1, score(-p1)), (p1, score(1.0 - p1))])
    }
}

/// Strict CSV ingestion: a header row, one sample per line, final column the
/// 0/1 label. Any non-numeric cell is a parse error carrying its line number.
pub fn logreg_from_csv(path: &Path, reg: f64) -> Result<LogisticRegression> {
    let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(e.to_string()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ProblemError::Csv {
        line: 1,
        message: "missing header row".into(),
    })?;
    let num_cols = header.split(',').count();
    if num_cols < 2 {
        return Err(ProblemError::Csv {
            line: 1,
            message: "need at least one feature column and one label column".into(),
        });
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != num_cols {
            return Err(ProblemError::Csv {
                line: line_no,
                message: format!("expected {} columns, found {}", num_cols, cells.len()),
            });
        }
        for (c, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| ProblemError::Csv {
                line: line_no,
                message: format!("non-numeric cell {:?} in column {}", cell.trim(), c + 1),
            })?;
            if c + 1 == num_cols {
                labels.push(value);
            } else {
                rows.push(value);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(ProblemError::Csv {
            line: 1,
            message: "no data rows".into(),
        });
    }
    let x = Mat::from_flat(n, num_cols - 1, &rows);
    logreg_make(x, labels, reg)
}
