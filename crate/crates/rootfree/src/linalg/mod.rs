//! Dense linear algebra kernel for small matrices.
//!
//! Everything here operates on the row-major [`Mat`] type and plain `&[f64]`
//! vectors. The kernel is deliberately minimal: symmetric eigendecomposition
//! (cyclic Jacobi), SPD matrix powers, matrix exponentials (exact and
//! first-order truncated), Kronecker products, Cholesky and LU solves.
//! All operations are pure functions and deterministic for identical input.
//!
//! Flattening convention: a vector of length `p * d` reshapes row-major into
//! a `p x d` matrix (see [`Mat::from_flat`]). Under this convention the
//! Kronecker identity reads `(A ⊗ B) vec(X) = vec(A X Bᵀ)`.

mod eig;
mod funcs;
mod mat;
mod solve;

pub use eig::{jacobi_sweep, sym_eig, SymEig};
pub use funcs::{kron, mat_exp, mat_exp_trunc1, spd_power};
pub use mat::{dot, norm2, vec_max_abs, Mat};
pub use solve::{cholesky, det, inverse, solve, spd_inverse, spd_solve};

use thiserror::Error;

/// Errors produced by the linear algebra kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },
    #[error("dimension mismatch: {left} vs {right} in {op}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("Jacobi eigendecomposition did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not positive definite (offending eigenvalue {eigenvalue:.6e})")]
    NotPositiveDefinite { eigenvalue: f64 },
    #[error("matrix is singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, LinalgError>;
