use super::{LinalgError, Mat, Result};

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite matrix.
/// Returns the lower-triangular factor. A non-positive pivot is reported as a
/// definiteness error carrying the pivot value.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    a.require_square()?;
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite { eigenvalue: acc });
                }
                l[(i, j)] = acc.sqrt();
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Ok(l)
}

fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[(i, k)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[(k, i)] * x[k];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn spd_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            op: "spd_solve",
            left: format!("{}x{}", a.rows(), a.cols()),
            right: format!("{}", b.len()),
        });
    }
    let l = cholesky(a)?;
    Ok(chol_solve(&l, b))
}

/// Inverse of a symmetric positive definite matrix, symmetrized to kill
/// roundoff asymmetry.
pub fn spd_inverse(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    let l = cholesky(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = chol_solve(&l, &e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv.symmetrized())
}

struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

fn lu_decompose(a: &Mat) -> Result<Lu> {
    a.require_square()?;
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[(col, col)].abs();
        for r in (col + 1)..n {
            let mag = lu[(r, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(col, pivot_row);
            sign = -sign;
        }
        let pivot = lu[(col, col)];
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / pivot;
            lu[(r, col)] = factor;
            for j in (col + 1)..n {
                lu[(r, j)] -= factor * lu[(col, j)];
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

fn lu_solve(f: &Lu, b: &[f64]) -> Vec<f64> {
    let n = f.lu.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[f.perm[i]];
        for k in 0..i {
            acc -= f.lu[(i, k)] * y[k];
        }
        y[i] = acc;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= f.lu[(i, k)] * x[k];
        }
        x[i] = acc / f.lu[(i, i)];
    }
    x
}

/// Solve `A x = b` for a general nonsingular square matrix (partial-pivot LU).
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve",
            left: format!("{}x{}", a.rows(), a.cols()),
            right: format!("{}", b.len()),
        });
    }
    let f = lu_decompose(a)?;
    Ok(lu_solve(&f, b))
}

/// Inverse of a general nonsingular square matrix.
pub fn inverse(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    let f = lu_decompose(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu_solve(&f, &e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Determinant via LU; zero for singular input.
pub fn det(a: &Mat) -> Result<f64> {
    a.require_square()?;
    match lu_decompose(a) {
        Ok(f) => {
            let mut d = f.sign;
            for i in 0..a.rows() {
                d *= f.lu[(i, i)];
            }
            Ok(d)
        }
        Err(LinalgError::Singular) => Ok(0.0),
        Err(e) => Err(e),
    }
}
