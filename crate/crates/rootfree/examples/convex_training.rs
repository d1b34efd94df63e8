//! All eight update rules on one stochastic convex problem: a seeded
//! synthetic logistic regression trained with mini-batches, measured against
//! a Newton-accurate reference optimum. The square-root-free and
//! inverse-free methods converge comfortably alongside their root-based
//! counterparts in this setting.

use rootfree::linalg::{solve, vec_max_abs, Mat};
use rootfree::optim::{run_optimizer, ExpMode, Hyper, Method, RunOptions};
use rootfree::problems::{batch_grad, synthetic_logreg, Batch, Problem, Reduction};

/// Newton with a finite-difference Hessian: the reference optimum.
fn reference_optimum(p: &dyn Problem) -> f64 {
    let dim = p.dim();
    let batch = Batch::full(p.num_samples());
    let mut mu = vec![0.0; dim];
    let h = 1e-5;
    for _ in 0..50 {
        let g = batch_grad(p, &mu, &batch).unwrap();
        if vec_max_abs(&g) < 1e-11 {
            break;
        }
        let mut hess = Mat::zeros(dim, dim);
        let mut point = mu.clone();
        for j in 0..dim {
            let orig = point[j];
            point[j] = orig + h;
            let gp = batch_grad(p, &point, &batch).unwrap();
            point[j] = orig - h;
            let gm = batch_grad(p, &point, &batch).unwrap();
            point[j] = orig;
            for i in 0..dim {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let step = solve(&hess.symmetrized(), &g).unwrap();
        for (m, s) in mu.iter_mut().zip(&step) {
            *m -= s;
        }
    }
    p.full_loss(&mu)
}

fn main() {
    let problem = synthetic_logreg(100, 8, 0.5, 80)
        .with_mat_shape(4, 2)
        .unwrap()
        .with_reduction(Reduction::Mean);
    let optimum = reference_optimum(&problem);
    println!("seeded logistic regression, N = 100, d = 8, mean reduction");
    println!("reference optimum (Newton): {optimum:.8}\n");

    let h = Hyper {
        beta1: 0.1,
        beta2: 0.05,
        gamma: 1.0,
        lambda: 1e-4,
        kappa: 0.0,
        alpha1: 0.0,
        b: 20,
        reduction: Reduction::Mean,
        exp_mode: ExpMode::Trunc1,
    };
    println!(
        "{:>18} {:>14} {:>14} {:>10}",
        "method", "best loss", "gap", "status"
    );
    for method in Method::ALL {
        // Root-based matrix/full accumulators start at zero and need their
        // quarter-root damping; everything else uses its own default init.
        let hyper = match method {
            Method::Shampoo | Method::AdagradFull => Hyper {
                lambda: 1e-3,
                ..h.clone()
            },
            _ => h.clone(),
        };
        let opts = RunOptions::new(2000, 81, 20, vec![0.0; 8]);
        let t = run_optimizer(&problem, method, &hyper, &opts).unwrap();
        let status = if t.diverged() { "diverged" } else { "ok" };
        println!(
            "{:>18} {:>14.8} {:>14.2e} {:>10}",
            method.as_str(),
            t.min_loss(),
            t.min_loss() - optimum,
            status
        );
    }
}
