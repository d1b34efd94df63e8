//! Optimizer update rules and the training loop.
//!
//! Root-based methods (RMSProp, full-matrix AdaGrad, Shampoo) apply a square
//! root to their preconditioner; their square-root-free counterparts drop the
//! root, pick up the batch-size factor `B` of the aggregated-gradient Fisher,
//! and initialize accumulators to one/identity instead of zero. The
//! inverse-free Shampoo variant reparameterizes the inverse preconditioner
//! factors as `S_C⁻¹ = CCᵀ`, `S_K⁻¹ = KKᵀ` and updates `C`, `K` through
//! (optionally truncated) matrix exponentials, so a step needs neither an
//! inverse nor a decomposition.
//!
//! Step functions are pure (state in, state out) and follow their update
//! rules line by line: preconditioner first, then momentum, then parameters.
//! Where two factors update "simultaneously", both right-hand sides read the
//! pre-update values. Under a reduced-precision policy, every named line's
//! result is rounded exactly once.

mod diag;
mod full;
mod kron;
mod run;

pub use diag::{rf_rmsprop_step, rmsprop_step, sgd_step};
pub use full::{adagrad_full_rf_step, adagrad_full_root_step};
pub use kron::{if_shampoo_step, rf_shampoo_step, shampoo_step};
pub use run::{apply_step, run_optimizer, RunOptions, RunStatus, Trajectory, TrajectoryRecord};

use thiserror::Error;

use crate::linalg::{LinalgError, Mat};
use crate::problems::Reduction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("zero denominator at coordinate {index} with nonzero gradient")]
    DivisionGuard { index: usize },
    #[error("preconditioner is not positive definite: {0}")]
    Definiteness(LinalgError),
    #[error("linear algebra failure: {0}")]
    Linalg(LinalgError),
    #[error("hyperparameter out of range: {0}")]
    BadHyper(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
}

impl From<LinalgError> for OptimError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotPositiveDefinite { .. } | LinalgError::Singular => {
                OptimError::Definiteness(e)
            }
            other => OptimError::Linalg(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, OptimError>;

/// How the matrix exponential in the inverse-free update is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpMode {
    /// First-order truncation `exp(N) ≈ I + N`: no decompositions anywhere.
    #[default]
    Trunc1,
    /// Eigendecomposition-based exact exponential.
    Exact,
}

impl ExpMode {
    pub fn by_name(name: &str) -> Option<ExpMode> {
        match name {
            "trunc1" => Some(ExpMode::Trunc1),
            "exact" => Some(ExpMode::Exact),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExpMode::Trunc1 => "trunc1",
            ExpMode::Exact => "exact",
        }
    }
}

/// Update-rule scalars shared by every method.
///
/// `gamma` switches between an exponential moving average (`1`) and
/// AdaGrad-style accumulation (`0`); other values are accepted but flagged by
/// [`Hyper::validate`]. `b` is the batch-size factor of the scaled-loss
/// Fisher; it multiplies the squared-gradient term in square-root-free
/// updates and should equal the number of points averaged in the loss
/// (1 for summed losses).
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub alpha1: f64,
    pub b: usize,
    pub reduction: Reduction,
    pub exp_mode: ExpMode,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            beta1: 0.01,
            beta2: 0.999,
            gamma: 1.0,
            lambda: 1e-8,
            kappa: 0.0,
            alpha1: 0.0,
            b: 1,
            reduction: Reduction::Sum,
            exp_mode: ExpMode::Trunc1,
        }
    }
}

impl Hyper {
    /// Check the invariants; returns warnings for allowed-but-unusual values.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.beta1 > 0.0) {
            return Err(OptimError::BadHyper("beta1 > 0".into()));
        }
        if !(self.beta2 > 0.0 && self.beta2 <= 1.0) {
            return Err(OptimError::BadHyper("beta2 ∈ (0,1]".into()));
        }
        if self.lambda < 0.0 {
            return Err(OptimError::BadHyper("lambda ≥ 0".into()));
        }
        if self.kappa < 0.0 {
            return Err(OptimError::BadHyper("kappa ≥ 0".into()));
        }
        if !(self.alpha1 >= 0.0 && self.alpha1 < 1.0) {
            return Err(OptimError::BadHyper("alpha1 ∈ [0,1)".into()));
        }
        if self.b < 1 {
            return Err(OptimError::BadHyper("b ≥ 1".into()));
        }
        let mut warnings = Vec::new();
        if self.gamma != 0.0 && self.gamma != 1.0 {
            warnings.push(format!(
                "gamma = {} is neither 0 (accumulation) nor 1 (moving average)",
                self.gamma
            ));
        }
        Ok(warnings)
    }

    /// The batch factor as a float.
    pub(crate) fn b_factor(&self) -> f64 {
        self.b as f64
    }
}

/// Elementwise preconditioner plus momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagState {
    pub s: Vec<f64>,
    pub m: Vec<f64>,
}

impl DiagState {
    /// `s` filled with `init`, zero momentum. Root-free methods initialize
    /// `s` to one; root-based accumulators start at zero.
    pub fn new(dim: usize, init: f64) -> DiagState {
        DiagState {
            s: vec![init; dim],
            m: vec![0.0; dim],
        }
    }
}

/// Full-matrix preconditioner plus momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub s: Mat,
    pub m: Vec<f64>,
}

impl FullState {
    /// `S = init * I`, zero momentum.
    pub fn new(dim: usize, init: f64) -> FullState {
        FullState {
            s: Mat::scaled_identity(dim, init),
            m: vec![0.0; dim],
        }
    }
}

/// Kronecker-factored preconditioner (`S_C`, `S_K`, or the PSD accumulators
/// of root-based Shampoo) plus a `p x d` momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct KronState {
    pub s_c: Mat,
    pub s_k: Mat,
    pub m: Mat,
}

impl KronState {
    pub fn new(p: usize, d: usize, init: f64) -> KronState {
        KronState {
            s_c: Mat::scaled_identity(p, init),
            s_k: Mat::scaled_identity(d, init),
            m: Mat::zeros(p, d),
        }
    }
}

/// Inverse-free Kronecker state: nonsingular factors with
/// `S_C⁻¹ = CCᵀ` and `S_K⁻¹ = KKᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfKronState {
    pub c: Mat,
    pub k: Mat,
    pub m: Mat,
}

impl IfKronState {
    /// Identity factors, zero momentum.
    pub fn new(p: usize, d: usize) -> IfKronState {
        IfKronState {
            c: Mat::identity(p),
            k: Mat::identity(d),
            m: Mat::zeros(p, d),
        }
    }
}

/// Per-method optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Sgd { m: Vec<f64> },
    Diag(DiagState),
    Full(FullState),
    Kron(KronState),
    IfKron(IfKronState),
}

/// The update rules this crate implements, keyed by their config names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sgd,
    Rmsprop,
    RfRmsprop,
    AdagradFull,
    RfAdagradFull,
    Shampoo,
    RfShampoo,
    IfShampoo,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sgd,
        Method::Rmsprop,
        Method::RfRmsprop,
        Method::AdagradFull,
        Method::RfAdagradFull,
        Method::Shampoo,
        Method::RfShampoo,
        Method::IfShampoo,
    ];

    pub fn by_name(name: &str) -> Result<Method> {
        match name {
            "sgd" => Ok(Method::Sgd),
            "rmsprop" => Ok(Method::Rmsprop),
            "rf-rmsprop" => Ok(Method::RfRmsprop),
            "adagrad-full" => Ok(Method::AdagradFull),
            "rf-adagrad-full" => Ok(Method::RfAdagradFull),
            "shampoo" => Ok(Method::Shampoo),
            "rf-shampoo" => Ok(Method::RfShampoo),
            "if-shampoo" => Ok(Method::IfShampoo),
            other => Err(OptimError::UnknownMethod(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Rmsprop => "rmsprop",
            Method::RfRmsprop => "rf-rmsprop",
            Method::AdagradFull => "adagrad-full",
            Method::RfAdagradFull => "rf-adagrad-full",
            Method::Shampoo => "shampoo",
            Method::RfShampoo => "rf-shampoo",
            Method::IfShampoo => "if-shampoo",
        }
    }

    /// Default accumulator initialization: zero for root-based methods,
    /// one/identity for root-free and inverse-free ones.
    pub fn default_precond_init(&self) -> f64 {
        match self {
            Method::Sgd => 0.0,
            Method::Rmsprop | Method::AdagradFull | Method::Shampoo => 0.0,
            Method::RfRmsprop | Method::RfAdagradFull | Method::RfShampoo | Method::IfShampoo => {
                1.0
            }
        }
    }

    /// Whether the method treats the parameter as a `p x d` matrix.
    pub fn is_matrix_shaped(&self) -> bool {
        matches!(self, Method::Shampoo | Method::RfShampoo | Method::IfShampoo)
    }

    /// Fresh state for a parameter of the given shape.
    pub fn init_state(&self, dim: usize, mat_shape: (usize, usize), precond_init: f64) -> OptimizerState {
        match self {
            Method::Sgd => OptimizerState::Sgd { m: vec![0.0; dim] },
            Method::Rmsprop | Method::RfRmsprop => {
                OptimizerState::Diag(DiagState::new(dim, precond_init))
            }
            Method::AdagradFull | Method::RfAdagradFull => {
                OptimizerState::Full(FullState::new(dim, precond_init))
            }
            Method::Shampoo | Method::RfShampoo => {
                OptimizerState::Kron(KronState::new(mat_shape.0, mat_shape.1, precond_init))
            }
            Method::IfShampoo => OptimizerState::IfKron(IfKronState::new(mat_shape.0, mat_shape.1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::by_name(m.as_str()).unwrap(), m);
        }
        assert!(matches!(
            Method::by_name("adamw"),
            Err(OptimError::UnknownMethod(_))
        ));
    }

    #[test]
    fn hyper_validation() {
        assert!(Hyper::default().validate().unwrap().is_empty());
        let bad = Hyper {
            beta2: 1.5,
            ..Hyper::default()
        };
        assert!(matches!(bad.validate(), Err(OptimError::BadHyper(_))));
        let flagged = Hyper {
            gamma: 0.5,
            ..Hyper::default()
        };
        assert_eq!(flagged.validate().unwrap().len(), 1);
    }

    #[test]
    fn default_inits_follow_the_rootfree_convention() {
        assert_eq!(Method::Rmsprop.default_precond_init(), 0.0);
        assert_eq!(Method::RfRmsprop.default_precond_init(), 1.0);
        assert_eq!(Method::Shampoo.default_precond_init(), 0.0);
        assert_eq!(Method::RfShampoo.default_precond_init(), 1.0);
    }
}
