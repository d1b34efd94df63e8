use super::{LinalgError, Mat, Result};

/// Sweep cap for the cyclic Jacobi iteration.
const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to ||A||_F.
const OFF_DIAG_REL_TOL: f64 = 1e-14;
/// Symmetry tolerance relative to the largest entry magnitude.
const SYMMETRY_REL_TOL: f64 = 1e-10;

/// Symmetric eigendecomposition `A = Q diag(values) Qᵀ`.
///
/// Eigenvalues are sorted ascending; column `i` of `vectors` is the
/// eigenvector paired with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEig {
    /// Smallest eigenvalue.
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// Rebuild `Q f(diag) Qᵀ` with eigenvalues mapped through `f`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let q = &self.vectors;
        let mut scaled = Mat::zeros(n, n);
        for i in 0..n {
            let fv = f(self.values[i]);
            for r in 0..n {
                scaled[(r, i)] = q[(r, i)] * fv;
            }
        }
        scaled.matmul(&q.transpose()).symmetrized()
    }
}

/// One cyclic Jacobi sweep over all off-diagonal pairs of the symmetric
/// matrix `b`, accumulating rotations into `q`. Returns the off-diagonal
/// Frobenius norm after the sweep.
///
/// Exposed so callers can run the iteration under a custom schedule, e.g.
/// with reduced-precision rounding between sweeps.
pub fn jacobi_sweep(b: &mut Mat, q: &mut Mat) -> f64 {
    let n = b.rows();
    for p in 0..n {
        for r in (p + 1)..n {
            let apq = b[(p, r)];
            if apq == 0.0 {
                continue;
            }
            let theta = (b[(r, r)] - b[(p, p)]) / (2.0 * apq);
            // Smaller-magnitude tangent root keeps the rotation stable.
            let t = if theta >= 0.0 {
                1.0 / (theta + (theta * theta + 1.0).sqrt())
            } else {
                -1.0 / (-theta + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            rotate(b, q, p, r, c, s, t, apq);
        }
    }
    off_diag_norm(b)
}

fn rotate(b: &mut Mat, q: &mut Mat, p: usize, r: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = b.rows();
    let bpp = b[(p, p)];
    let brr = b[(r, r)];
    b[(p, p)] = bpp - t * apq;
    b[(r, r)] = brr + t * apq;
    b[(p, r)] = 0.0;
    b[(r, p)] = 0.0;
    for k in 0..n {
        if k != p && k != r {
            let bkp = b[(k, p)];
            let bkr = b[(k, r)];
            let new_kp = c * bkp - s * bkr;
            let new_kr = s * bkp + c * bkr;
            b[(k, p)] = new_kp;
            b[(p, k)] = new_kp;
            b[(k, r)] = new_kr;
            b[(r, k)] = new_kr;
        }
    }
    for k in 0..n {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = c * qkp - s * qkr;
        q[(k, r)] = s * qkp + c * qkr;
    }
}

fn off_diag_norm(b: &Mat) -> f64 {
    let n = b.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += b[(i, j)] * b[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input must be square and symmetric within `1e-10 * max|a_ij|`.
/// Deterministic: identical input yields identical output.
pub fn sym_eig(a: &Mat) -> Result<SymEig> {
    a.require_symmetric(SYMMETRY_REL_TOL)?;
    let n = a.rows();

    let mut b = a.symmetrized();
    let mut q = Mat::identity(n);
    let tol = OFF_DIAG_REL_TOL * b.fro_norm();

    if off_diag_norm(&b) > tol {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if jacobi_sweep(&mut b, &mut q) <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b[(i, i)].partial_cmp(&b[(j, j)]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| b[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| q[(r, order[c])]);
    Ok(SymEig { values, vectors })
}
