//! Empirical Fisher constructions and the mini-batch unbiasedness checker.
//!
//! Two empirical Fisher flavors are distinguished: the per-sample outer
//! product sum `Σ g_i g_iᵀ` (standard) and the aggregated-gradient outer
//! product `(Σ g_i)(Σ g_i)ᵀ` (the rank-one gradient outer product `H`), plus
//! its `1/N`-scaled variant for averaged losses. The exact Fisher takes the
//! label expectation instead of plugging in observed labels; for problems
//! with enumerable labels it is computed by exhaustive enumeration.
//!
//! The unnormalizable outer product of a rescaled per-sample model has no
//! constructor here on purpose: a distribution that cannot be normalized
//! does not define a Fisher.
//!
//! All estimates are computed and stored at reference (f64) precision; they
//! are verification instruments, not optimizer state.

use itertools::Itertools;
use thiserror::Error;

use crate::linalg::Mat;
use crate::problems::Problem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FisherError {
    #[error("gradient list is empty")]
    EmptyGradients,
    #[error("gradient {index} has dimension {got}, expected {expected}")]
    DimMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("normalizing count must be positive")]
    BadCount,
    #[error("problem does not expose a discrete label model")]
    Unsupported,
    #[error("subset enumeration C({n},{b}) exceeds the {limit} guard")]
    TooManySubsets { n: usize, b: usize, limit: u64 },
}

pub type Result<T> = std::result::Result<T, FisherError>;

/// Which construction produced a Fisher estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherKind {
    /// `Σ g_i g_iᵀ` over per-sample gradients.
    Standard,
    /// `(Σ g_i)(Σ g_i)ᵀ`: the aggregated-gradient outer product, rank one.
    New,
    /// `(1/N) (Σ g_i)(Σ g_i)ᵀ`: the variant matching an averaged loss.
    Scaled,
    /// Exact label expectation over a subset of samples.
    MiniExact,
    /// Exact label expectation over all samples.
    FullExact,
}

/// A symmetric PSD matrix tagged with its construction.
#[derive(Debug, Clone)]
pub struct FisherEstimate {
    pub matrix: Mat,
    pub kind: FisherKind,
    /// The normalizing count the construction used (`N`, `B`, or the
    /// gradient count).
    pub n_or_b: usize,
}

fn check_grads(grads: &[Vec<f64>]) -> Result<usize> {
    let first = grads.first().ok_or(FisherError::EmptyGradients)?;
    let dim = first.len();
    for (i, g) in grads.iter().enumerate() {
        if g.len() != dim {
            return Err(FisherError::DimMismatch {
                index: i,
                got: g.len(),
                expected: dim,
            });
        }
    }
    Ok(dim)
}

/// Standard empirical Fisher `Σ g_i g_iᵀ`.
pub fn emp_fisher_standard(grads: &[Vec<f64>]) -> Result<FisherEstimate> {
    let dim = check_grads(grads)?;
    let mut m = Mat::zeros(dim, dim);
    for g in grads {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += g[i] * g[j];
            }
        }
    }
    Ok(FisherEstimate {
        matrix: m,
        kind: FisherKind::Standard,
        n_or_b: grads.len(),
    })
}

/// Aggregated-gradient empirical Fisher `(Σ g_i)(Σ g_i)ᵀ = H`.
pub fn emp_fisher_new(grads: &[Vec<f64>]) -> Result<FisherEstimate> {
    let dim = check_grads(grads)?;
    let mut total = vec![0.0; dim];
    for g in grads {
        for (acc, v) in total.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok(FisherEstimate {
        matrix: Mat::outer(&total, &total),
        kind: FisherKind::New,
        n_or_b: grads.len(),
    })
}

/// Scaled empirical Fisher `(1/N)(Σ g_i)(Σ g_i)ᵀ`, the construction that
/// matches a loss averaged over `n` points.
pub fn emp_fisher_scaled(grads: &[Vec<f64>], n: usize) -> Result<FisherEstimate> {
    if n == 0 {
        return Err(FisherError::BadCount);
    }
    let raw = emp_fisher_new(grads)?;
    Ok(FisherEstimate {
        matrix: raw.matrix.scale(1.0 / n as f64),
        kind: FisherKind::Scaled,
        n_or_b: n,
    })
}

/// Exact Fisher `Σ_{i ∈ subset} E_y[∇log p ∇log pᵀ]` by exhaustive label
/// enumeration. Only problems exposing a discrete label model are supported.
pub fn exact_fisher(p: &dyn Problem, mu: &[f64], subset: &[usize]) -> Result<FisherEstimate> {
    let dim = p.dim();
    let mut m = Mat::zeros(dim, dim);
    for &i in subset {
        let pairs = p
            .label_enumeration(mu, i)
            .ok_or(FisherError::Unsupported)?;
        for (prob, score) in pairs {
            for r in 0..dim {
                for c in 0..dim {
                    m[(r, c)] += prob * score[r] * score[c];
                }
            }
        }
    }
    let kind = if subset.len() == p.num_samples() {
        FisherKind::FullExact
    } else {
        FisherKind::MiniExact
    };
    Ok(FisherEstimate {
        matrix: m,
        kind,
        n_or_b: subset.len(),
    })
}

fn binomial(n: usize, b: usize) -> u64 {
    let b = b.min(n - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

const SUBSET_GUARD: u64 = 1_000_000;

/// Max deviation between the subset-averaged `(1/B) F_mini` and the
/// full-batch `(1/N) F`, over all size-`b` subsets. Zero (to roundoff) when
/// the mini-batch Fisher is an unbiased estimator of the full-batch one.
pub fn check_unbiasedness(p: &dyn Problem, mu: &[f64], b: usize) -> Result<f64> {
    let n = p.num_samples();
    assert!(b >= 1 && b <= n, "batch size must be in 1..=N");
    let count = binomial(n, b);
    if count > SUBSET_GUARD {
        return Err(FisherError::TooManySubsets {
            n,
            b,
            limit: SUBSET_GUARD,
        });
    }

    let dim = p.dim();
    let mut mean = Mat::zeros(dim, dim);
    // Fixed index order keeps the summation deterministic.
    for subset in (0..n).combinations(b) {
        let f = exact_fisher(p, mu, &subset)?;
        mean = mean.add(&f.matrix.scale(1.0 / b as f64));
    }
    mean = mean.scale(1.0 / count as f64);

    let full = exact_fisher(p, mu, &(0..n).collect::<Vec<_>>())?;
    let reference = full.matrix.scale(1.0 / n as f64);
    Ok(mean.sub(&reference).max_abs())
}
