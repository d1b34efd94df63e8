use super::eig::sym_eig;
use super::{LinalgError, Mat, Result};

/// Real power `A^e = Q diag(λ^e) Qᵀ` of a symmetric positive definite matrix.
///
/// Refuses non-positive eigenvalues instead of clamping; damping is the
/// caller's responsibility.
pub fn spd_power(a: &Mat, e: f64) -> Result<Mat> {
    let eig = sym_eig(a)?;
    let min = eig.min_value();
    if min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { eigenvalue: min });
    }
    Ok(eig.reconstruct_with(|x| x.powf(e)))
}

/// Matrix exponential `exp(N) = Q diag(exp λ) Qᵀ` of a symmetric matrix.
pub fn mat_exp(n: &Mat) -> Result<Mat> {
    let eig = sym_eig(n)?;
    Ok(eig.reconstruct_with(f64::exp))
}

/// First-order truncation of the matrix exponential: `I + N`, exactly.
pub fn mat_exp_trunc1(n: &Mat) -> Result<Mat> {
    n.require_square()?;
    Ok(n.add_scaled_identity(1.0))
}

/// Kronecker product `A ⊗ B`.
///
/// With the crate's row-major flattening, `(A ⊗ B) vec(X) = vec(A X Bᵀ)`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}
