use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{norm2, Mat};
use crate::precision::PrecisionPolicy;
use crate::problems::{batch_grad, Batch, Problem};

use super::{
    adagrad_full_rf_step, adagrad_full_root_step, if_shampoo_step, rf_rmsprop_step, rf_shampoo_step,
    rmsprop_step, sgd_step, shampoo_step, Hyper, Method, OptimizerState, Result,
};

/// One trajectory record; `wall_ns` is wall-clock time since the run started
/// and is excluded from determinism guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub param_norm: f64,
    pub wall_ns: u64,
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Loss or state became non-finite, or a step failed; the record at the
    /// halting step is kept.
    Diverged { at_step: usize, reason: String },
}

/// Deterministic record of a run: one record per step, starting at step 0
/// with the initial point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub status: RunStatus,
    pub final_params: Vec<f64>,
    pub final_state: OptimizerState,
}

impl Trajectory {
    pub fn final_loss(&self) -> f64 {
        self.records.last().map(|r| r.loss).unwrap_or(f64::NAN)
    }

    pub fn min_loss(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.loss)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

/// Options for [`run_optimizer`] beyond the update-rule scalars.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub steps: usize,
    pub seed: u64,
    /// Mini-batch size; batches are drawn by seeded shuffling without
    /// replacement each epoch. The final ragged chunk of an epoch is used.
    pub batch_size: usize,
    pub mu0: Vec<f64>,
    /// Accumulator initialization scale; `None` picks the method default
    /// (zero for root-based, one/identity for root-free).
    pub precond_init: Option<f64>,
    pub policy: PrecisionPolicy,
}

impl RunOptions {
    pub fn new(steps: usize, seed: u64, batch_size: usize, mu0: Vec<f64>) -> RunOptions {
        RunOptions {
            steps,
            seed,
            batch_size,
            mu0,
            precond_init: None,
            policy: PrecisionPolicy::REFERENCE,
        }
    }

    pub fn with_policy(mut self, policy: PrecisionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_precond_init(mut self, init: f64) -> Self {
        self.precond_init = Some(init);
        self
    }
}

struct BatchSchedule {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
}

impl BatchSchedule {
    fn new(n: usize, batch_size: usize, seed: u64) -> BatchSchedule {
        BatchSchedule {
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..n).collect(),
            cursor: n, // force a shuffle on first use
            batch_size: batch_size.min(n).max(1),
        }
    }

    fn next_batch(&mut self) -> Batch {
        let n = self.order.len();
        if self.cursor >= n {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let end = (self.cursor + self.batch_size).min(n);
        let indices = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        Batch::new(indices, n).expect("schedule produces valid batches")
    }
}

/// Apply one step of `method` to flat parameters. Matrix-shaped methods
/// reshape `mu` and `g` row-major into `mat_shape`. The state variant must
/// match the method (as produced by [`Method::init_state`]).
pub fn apply_step(
    method: Method,
    mat_shape: (usize, usize),
    mu: &[f64],
    g: &[f64],
    state: &OptimizerState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, OptimizerState)> {
    let (rows, cols) = mat_shape;
    match (method, state) {
        (Method::Sgd, OptimizerState::Sgd { m }) => {
            let (mu1, m1) = sgd_step(mu, g, m, h, policy)?;
            Ok((mu1, OptimizerState::Sgd { m: m1 }))
        }
        (Method::Rmsprop, OptimizerState::Diag(st)) => {
            let (mu1, st1) = rmsprop_step(mu, g, st, h, policy)?;
            Ok((mu1, OptimizerState::Diag(st1)))
        }
        (Method::RfRmsprop, OptimizerState::Diag(st)) => {
            let (mu1, st1) = rf_rmsprop_step(mu, g, st, h, policy)?;
            Ok((mu1, OptimizerState::Diag(st1)))
        }
        (Method::AdagradFull, OptimizerState::Full(st)) => {
            let (mu1, st1) = adagrad_full_root_step(mu, g, st, h, policy)?;
            Ok((mu1, OptimizerState::Full(st1)))
        }
        (Method::RfAdagradFull, OptimizerState::Full(st)) => {
            let (mu1, st1) = adagrad_full_rf_step(mu, g, st, h, policy)?;
            Ok((mu1, OptimizerState::Full(st1)))
        }
        (Method::Shampoo, OptimizerState::Kron(st)) => {
            let mu_mat = Mat::from_flat(rows, cols, mu);
            let g_mat = Mat::from_flat(rows, cols, g);
            let (mu1, st1) = shampoo_step(&mu_mat, &g_mat, st, h, policy)?;
            Ok((mu1.to_flat(), OptimizerState::Kron(st1)))
        }
        (Method::RfShampoo, OptimizerState::Kron(st)) => {
            let mu_mat = Mat::from_flat(rows, cols, mu);
            let g_mat = Mat::from_flat(rows, cols, g);
            let (mu1, st1) = rf_shampoo_step(&mu_mat, &g_mat, st, h, policy)?;
            Ok((mu1.to_flat(), OptimizerState::Kron(st1)))
        }
        (Method::IfShampoo, OptimizerState::IfKron(st)) => {
            let mu_mat = Mat::from_flat(rows, cols, mu);
            let g_mat = Mat::from_flat(rows, cols, g);
            let (mu1, st1) = if_shampoo_step(&mu_mat, &g_mat, st, h, policy)?;
            Ok((mu1.to_flat(), OptimizerState::IfKron(st1)))
        }
        (m, _) => unreachable!("state kind does not match method {:?}", m),
    }
}

/// Run `opts.steps` optimizer steps on `p`. Deterministic given
/// `(seed, config)`: identical inputs yield identical records (up to the
/// wall-clock column). A non-finite loss or a failed step halts the run with
/// a divergence status rather than an error.
pub fn run_optimizer(
    p: &dyn Problem,
    method: Method,
    h: &Hyper,
    opts: &RunOptions,
) -> Result<Trajectory> {
    h.validate()?;
    let n = p.num_samples();
    let dim = p.dim();
    assert_eq!(opts.mu0.len(), dim, "initial point has wrong dimension");

    let precond_init = opts
        .precond_init
        .unwrap_or_else(|| method.default_precond_init());
    let mut state = method.init_state(dim, p.mat_shape(), precond_init);
    let mut mu = opts.mu0.clone();
    let mut schedule = BatchSchedule::new(n, opts.batch_size, opts.seed);
    let start = Instant::now();

    let full = Batch::full(n);
    let observe = |mu: &[f64], start: &Instant, step: usize| -> TrajectoryRecord {
        let loss = p.full_loss(mu);
        let g = batch_grad(p, mu, &full).map(|g| norm2(&g)).unwrap_or(f64::NAN);
        TrajectoryRecord {
            step,
            loss,
            grad_norm: g,
            param_norm: norm2(mu),
            wall_ns: start.elapsed().as_nanos() as u64,
        }
    };

    let mut records = vec![observe(&mu, &start, 0)];
    if !records[0].loss.is_finite() {
        return Ok(Trajectory {
            records,
            status: RunStatus::Diverged {
                at_step: 0,
                reason: "initial loss is not finite".into(),
            },
            final_params: mu.clone(),
            final_state: state,
        });
    }

    for step in 1..=opts.steps {
        let batch = schedule.next_batch();
        let g = match batch_grad(p, &mu, &batch) {
            Ok(g) => g,
            Err(e) => {
                return Ok(Trajectory {
                    records,
                    status: RunStatus::Diverged {
                        at_step: step,
                        reason: e.to_string(),
                    },
                    final_params: mu,
                    final_state: state,
                })
            }
        };
        match apply_step(method, p.mat_shape(), &mu, &g, &state, h, &opts.policy) {
            Ok((mu1, st1)) => {
                mu = mu1;
                state = st1;
            }
            Err(e) => {
                return Ok(Trajectory {
                    records,
                    status: RunStatus::Diverged {
                        at_step: step,
                        reason: e.to_string(),
                    },
                    final_params: mu,
                    final_state: state,
                })
            }
        }
        let record = observe(&mu, &start, step);
        let finite = record.loss.is_finite();
        records.push(record);
        if !finite {
            return Ok(Trajectory {
                records,
                status: RunStatus::Diverged {
                    at_step: step,
                    reason: "loss is not finite".into(),
                },
                final_params: mu,
                final_state: state,
            });
        }
    }

    Ok(Trajectory {
        records,
        status: RunStatus::Completed,
        final_params: mu,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::problems::{quadratic_make, synthetic_logreg, Problem};

    #[test]
    fn zero_steps_yields_one_record() {
        let p = quadratic_make(Mat::identity(2), vec![0.0, 0.0]).unwrap();
        let opts = RunOptions::new(0, 1, 1, vec![1.0, 1.0]);
        let t = run_optimizer(&p, Method::Sgd, &Hyper::default(), &opts).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].step, 0);
        assert!(!t.diverged());
    }

    #[test]
    fn same_seed_gives_identical_trajectories() {
        let p = synthetic_logreg(12, 3, 0.1, 2);
        let h = Hyper {
            beta1: 0.1,
            ..Hyper::default()
        };
        let opts = RunOptions::new(25, 42, 4, vec![0.0; 3]);
        let a = run_optimizer(&p, Method::RfRmsprop, &h, &opts).unwrap();
        let b = run_optimizer(&p, Method::RfRmsprop, &h, &opts).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.step, rb.step);
            assert!(ra.loss.to_bits() == rb.loss.to_bits());
            assert!(ra.grad_norm.to_bits() == rb.grad_norm.to_bits());
            assert!(ra.param_norm.to_bits() == rb.param_norm.to_bits());
        }
    }

    #[test]
    fn small_step_gradient_descent_decreases_quadratic_loss() {
        let q = Mat::diag(&[2.0, 0.5]);
        let p = quadratic_make(q, vec![0.0, 0.0]).unwrap();
        // β1 below 1/λ_max = 0.5 gives strict descent.
        let h = Hyper {
            beta1: 0.2,
            kappa: 0.0,
            alpha1: 0.0,
            ..Hyper::default()
        };
        let opts = RunOptions::new(30, 0, 1, vec![1.0, -2.0]);
        let t = run_optimizer(&p, Method::Sgd, &h, &opts).unwrap();
        for w in t.records.windows(2) {
            assert!(w[1].loss < w[0].loss, "loss must strictly decrease");
        }
    }

    #[test]
    fn divergence_is_reported_not_propagated() {
        // A huge step size on a quadratic blows up; the run must halt with a
        // divergence status and keep its records.
        let q = Mat::diag(&[4.0]);
        let p = quadratic_make(q, vec![0.0]).unwrap();
        let h = Hyper {
            beta1: 1e150,
            ..Hyper::default()
        };
        let opts = RunOptions::new(50, 0, 1, vec![1e160]);
        let t = run_optimizer(&p, Method::Sgd, &h, &opts).unwrap();
        assert!(t.diverged());
        assert!(t.records.len() <= 51);
    }

    #[test]
    fn batches_cover_each_epoch_without_replacement() {
        let mut schedule = BatchSchedule::new(10, 3, 9);
        let mut seen = vec![0usize; 10];
        // One epoch = ceil(10/3) = 4 batches (sizes 3,3,3,1).
        for _ in 0..4 {
            for &i in schedule.next_batch().indices() {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "epoch must visit each index once");
    }

    #[test]
    fn matrix_methods_run_on_matrix_problems() {
        let p = crate::problems::synthetic_matfact(3, 2, 8, 0.1, 4);
        // β2 must stay small enough that the truncated exponential of the
        // inverse-free method is a sensible approximation.
        let h = Hyper {
            beta1: 0.05,
            beta2: 0.05,
            ..Hyper::default()
        };
        let opts = RunOptions::new(20, 3, 4, vec![0.0; p.dim()]);
        for method in [Method::Shampoo, Method::RfShampoo, Method::IfShampoo] {
            let mut o = opts.clone();
            if method == Method::Shampoo {
                // The root-based accumulator needs damping from a zero start.
                o = o.with_precond_init(0.0);
            }
            let t = run_optimizer(&p, method, &h, &o).unwrap();
            assert!(!t.diverged(), "{method:?} diverged: {:?}", t.status);
            assert_eq!(t.records.len(), 21);
        }
    }
}
