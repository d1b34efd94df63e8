//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its runtime bound. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines).

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rootfree::fisher::{check_unbiasedness, emp_fisher_new, emp_fisher_standard};
use rootfree::linalg::{norm2, solve, sym_eig, vec_max_abs, Mat};
use rootfree::optim::{
    apply_step, rmsprop_step, run_optimizer, DiagState, ExpMode, FullState, Hyper, Method,
    OptimizerState, RunOptions,
};
use rootfree::precision::{FloatFormat, PrecisionPolicy};
use rootfree::problems::{
    batch_grad, finite_diff_grad, quadratic_make, synthetic_logreg, synthetic_matfact, Batch,
    Problem, Reduction,
};
use rootfree::verify::{
    verify_affine_invariance, verify_first_order_equiv, verify_precision_stress,
    verify_sign_descent, AffineOptions,
};

const REF: PrecisionPolicy = PrecisionPolicy::REFERENCE;

fn report(criterion: usize, description: &str, elapsed: Duration, bound: Duration) {
    println!(
        "[criterion {criterion:2}] PASS {description} ({:.3}s, bound {:.0}s)",
        elapsed.as_secs_f64(),
        bound.as_secs_f64()
    );
    assert!(
        elapsed < bound,
        "criterion {criterion} exceeded its runtime bound: {elapsed:?} vs {bound:?}"
    );
}

fn bare_hyper() -> Hyper {
    Hyper {
        beta1: 1.0,
        beta2: 1.0,
        gamma: 0.0,
        lambda: 0.0,
        kappa: 0.0,
        alpha1: 0.0,
        b: 1,
        reduction: Reduction::Sum,
        exp_mode: ExpMode::Trunc1,
    }
}

#[test]
fn criterion_01_worked_example_numbers() {
    let start = Instant::now();
    let h = bare_hyper();

    // Root-based 1-D steps: a1 = 1.0 and b1 = 0.0 under a = 2b, so the
    // invariance deviation |a1 - 2 b1| is exactly 1.
    let zero = DiagState::new(1, 0.0);
    let (a1, _) = rmsprop_step(&[2.0], &[2.0], &zero, &h, &REF).unwrap();
    let (b1, _) = rmsprop_step(&[1.0], &[4.0], &zero, &h, &REF).unwrap();
    assert_eq!(a1[0], 1.0);
    assert_eq!(b1[0], 0.0);
    assert_eq!((a1[0] - 2.0 * b1[0]).abs(), 1.0);

    // Root-free steps: a1 = 1.5, b1 = 0.75, equivalent through a = 2b.
    let full_zero = |dim: usize| OptimizerState::Full(FullState::new(dim, 0.0));
    let (a1, _) = apply_step(
        Method::RfAdagradFull,
        (1, 1),
        &[2.0],
        &[2.0],
        &full_zero(1),
        &h,
        &REF,
    )
    .unwrap();
    let (b1, _) = apply_step(
        Method::RfAdagradFull,
        (1, 1),
        &[1.0],
        &[4.0],
        &full_zero(1),
        &h,
        &REF,
    )
    .unwrap();
    assert_eq!(a1[0], 1.5);
    assert_eq!(b1[0], 0.75);
    assert!((a1[0] - 2.0 * b1[0]).abs() <= 1e-14);

    report(
        1,
        "worked 1-D numbers: root-based 1.0/0.0 (deviation 1), root-free 1.5/0.75 equivalent",
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_02_affine_invariance_random_reparameterizations() {
    let start = Instant::now();
    let h = Hyper {
        beta1: 0.3,
        beta2: 0.8,
        ..bare_hyper()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let log10_cond = 3.0 * (i as f64 + 1.0) / 20.0;
        let a = conditioned_matrix(5, log10_cond, &mut rng);
        let r = verify_affine_invariance(
            Method::RfAdagradFull,
            &a,
            50,
            &h,
            &AffineOptions {
                seed: 100 + i as u64,
                threshold: 1e-8,
                ..AffineOptions::default()
            },
        )
        .unwrap();
        assert!(r.pass, "A #{i}: deviation {}", r.max_deviation);
        worst = worst.max(r.max_deviation);
    }
    report(
        2,
        &format!("rf-adagrad-full affine invariance over 20 random A: max gap {worst:.2e} <= 1e-8"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

fn conditioned_matrix(dim: usize, log10_cond: f64, rng: &mut ChaCha8Rng) -> Mat {
    let q1 = sym_eig(&Mat::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0)).symmetrized())
        .unwrap()
        .vectors;
    let q2 = sym_eig(&Mat::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0)).symmetrized())
        .unwrap()
        .vectors;
    let mut d = Mat::zeros(dim, dim);
    for i in 0..dim {
        let t = i as f64 / (dim - 1) as f64;
        d[(i, i)] = 10f64.powf(-log10_cond * (1.0 - t));
    }
    q1.matmul(&d).matmul(&q2.transpose())
}

#[test]
fn criterion_03_minibatch_fisher_unbiasedness() {
    let start = Instant::now();
    let p = synthetic_logreg(6, 2, 0.0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mu: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut worst: f64 = 0.0;
    for b in 1..=6 {
        let dev = check_unbiasedness(&p, &mu, b).unwrap();
        assert!(dev <= 1e-10, "B={b}: deviation {dev}");
        worst = worst.max(dev);
    }
    report(
        3,
        &format!("exhaustive subset unbiasedness, N=6, B=1..6: max gap {worst:.2e} <= 1e-10"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_04_aggregated_fisher_is_rank_one_and_distinct() {
    let start = Instant::now();
    let p = synthetic_logreg(6, 3, 0.0, 11);
    let mu = vec![0.5, -0.2, 0.3];
    let grads: Vec<Vec<f64>> = (0..6).map(|i| p.per_sample_grad(&mu, i)).collect();
    let new = emp_fisher_new(&grads).unwrap();
    let standard = emp_fisher_standard(&grads).unwrap();

    let eig = sym_eig(&new.matrix).unwrap();
    let largest = eig.values[eig.values.len() - 1];
    let second = eig.values[eig.values.len() - 2].abs();
    assert!(second <= 1e-10 * largest, "second eigenvalue {second}");

    let dist = new.matrix.sub(&standard.matrix).fro_norm();
    assert!(dist > 0.0, "the two constructions must differ");

    report(
        4,
        &format!(
            "aggregated Fisher rank-1 (second/first = {:.1e}) and Frobenius-distinct ({dist:.3})",
            second / largest
        ),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_05_first_order_equivalence_ratio() {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..10).collect();
    let r = verify_first_order_equiv(4, 3, &[1e-2, 5e-3], &seeds).unwrap();
    assert!(r.pass, "ratios {:?}", r.trace);
    let ratios = r.trace.unwrap();
    for ratio in &ratios {
        assert!((3.5..=4.5).contains(ratio), "ratio {ratio}");
    }
    report(
        5,
        &format!(
            "rf vs inverse-free factor gap shrinks 4x under β2 halving (ratios {:.2}..{:.2})",
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0f64, f64::max)
        ),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_06_positive_definiteness_over_1000_steps() {
    let start = Instant::now();
    let steps = 1000;

    // rf-rmsprop and rf-adagrad-full on seeded logistic regression.
    let logreg = synthetic_logreg(30, 4, 0.1, 8);
    let h = Hyper {
        beta1: 0.05,
        beta2: 0.9,
        gamma: 1.0,
        lambda: 1e-8,
        ..bare_hyper()
    };
    for method in [Method::RfRmsprop, Method::RfAdagradFull] {
        let mut state = method.init_state(4, (4, 1), 1.0);
        let mut mu = vec![0.2; 4];
        let mut schedule_rng = ChaCha8Rng::seed_from_u64(61);
        for step in 0..steps {
            let batch = random_batch(30, 10, &mut schedule_rng);
            let g = batch_grad(&logreg, &mu, &batch).unwrap();
            let (mu1, st1) = apply_step(method, (4, 1), &mu, &g, &state, &h, &REF).unwrap();
            mu = mu1;
            state = st1;
            match &state {
                OptimizerState::Diag(d) => {
                    assert!(d.s.iter().all(|&x| x > 0.0), "{method:?} step {step}: s <= 0")
                }
                OptimizerState::Full(f) => {
                    let min = sym_eig(&f.s).unwrap().min_value();
                    assert!(min > 0.0, "{method:?} step {step}: min eigenvalue {min}");
                }
                _ => unreachable!(),
            }
        }
    }

    // rf-shampoo on a seeded matrix least-squares instance.
    let matfact = synthetic_matfact(4, 3, 12, 0.2, 9);
    let hk = Hyper {
        beta1: 0.02,
        beta2: 0.05,
        gamma: 1.0,
        lambda: 1e-8,
        ..bare_hyper()
    };
    let mut state = Method::RfShampoo.init_state(12, (4, 3), 1.0);
    let mut mu = vec![0.0; 12];
    let mut schedule_rng = ChaCha8Rng::seed_from_u64(62);
    for step in 0..steps {
        let batch = random_batch(12, 4, &mut schedule_rng);
        let g = batch_grad(&matfact, &mu, &batch).unwrap();
        let (mu1, st1) = apply_step(Method::RfShampoo, (4, 3), &mu, &g, &state, &hk, &REF).unwrap();
        mu = mu1;
        state = st1;
        if let OptimizerState::Kron(k) = &state {
            let min_c = sym_eig(&k.s_c).unwrap().min_value();
            let min_k = sym_eig(&k.s_k).unwrap().min_value();
            assert!(
                min_c > 0.0 && min_k > 0.0,
                "rf-shampoo step {step}: eigenvalues {min_c} / {min_k}"
            );
        } else {
            unreachable!()
        }
    }

    report(
        6,
        "rf-rmsprop / rf-adagrad-full / rf-shampoo preconditioners stay positive definite for 1000 steps",
        start.elapsed(),
        Duration::from_secs(30),
    );
}

fn random_batch(n: usize, b: usize, rng: &mut ChaCha8Rng) -> Batch {
    use rand::seq::SliceRandom;
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(b);
    Batch::new(all, n).unwrap()
}

#[test]
fn criterion_07_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let h = 1e-5;

    let rel_error = |p: &dyn Problem, mu: &[f64]| -> f64 {
        let subset: Vec<usize> = (0..p.num_samples()).collect();
        let batch = Batch::full(p.num_samples());
        let g = batch_grad(p, mu, &batch).unwrap();
        let fd = finite_diff_grad(p, mu, &subset, h);
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        norm2(&diff) / norm2(&g).max(1e-12)
    };

    let raw = Mat::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
    let quad = quadratic_make(
        raw.matmul(&raw.transpose()).add_scaled_identity(0.5),
        (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let logreg = synthetic_logreg(20, 4, 0.3, 71);
    let matfact = synthetic_matfact(4, 3, 6, 0.2, 72);

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mu6: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let mu4: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let mu12: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.5..1.5)).collect();
        for err in [
            rel_error(&quad, &mu6),
            rel_error(&logreg, &mu4),
            rel_error(&matfact, &mu12),
        ] {
            assert!(err <= 1e-6, "finite-difference relative error {err}");
            worst = worst.max(err);
        }
    }

    report(
        7,
        &format!("analytic vs central-difference gradients over 50 points/family: worst {worst:.2e} <= 1e-6"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

/// Newton with a finite-difference Hessian on the full-batch loss: the
/// independent high-accuracy oracle for the reference optimum.
fn newton_reference_optimum(p: &dyn Problem) -> f64 {
    let dim = p.dim();
    let batch = Batch::full(p.num_samples());
    let mut mu = vec![0.0; dim];
    let h = 1e-5;
    for _ in 0..60 {
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

#[test]
fn criterion_08_convex_training_reaches_reference_optimum() {
    let start = Instant::now();
    let problem = synthetic_logreg(100, 8, 0.5, 80)
        .with_mat_shape(4, 2)
        .unwrap()
        .with_reduction(Reduction::Mean);
    let optimum = newton_reference_optimum(&problem);

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
    for method in [Method::RfRmsprop, Method::RfShampoo] {
        let opts = RunOptions::new(2000, 81, 20, vec![0.0; 8]);
        let t = run_optimizer(&problem, method, &h, &opts).unwrap();
        assert!(!t.diverged(), "{method:?} diverged: {:?}", t.status);
        let gap = t.min_loss() - optimum;
        assert!(
            gap <= 1e-3,
            "{method:?}: best loss gap {gap} exceeds 1e-3 (optimum {optimum})"
        );
    }

    report(
        8,
        &format!("rf-rmsprop and rf-shampoo reach the Newton reference optimum ({optimum:.6}) within 1e-3 in <= 2000 mini-batch steps"),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_09_low_precision_stress() {
    let start = Instant::now();
    let reports = verify_precision_stress(1e8, 500, FloatFormat::BF16, 21).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert!(r.pass, "{}: deviation {}", r.check, r.max_deviation);
    }
    // Part (a) must show a genuinely large degradation, not a borderline one.
    let observed = reports[0].trace.as_ref().unwrap()[0];
    assert!(observed > 0.1, "bf16 quarter-root error {observed} <= 0.1");

    report(
        9,
        &format!(
            "bf16 quarter root degrades (rel error {observed:.1}); 500-step bf16 if-shampoo stays finite within 2x of f64 loss"
        ),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_10_sign_descent_limit() {
    let start = Instant::now();
    let reports = verify_sign_descent().unwrap();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert!(r.pass, "{}: deviation {}", r.check, r.max_deviation);
    }
    report(
        10,
        "first-step magnitude: root-based invariant under g -> 10g, root-free scales by 1/10",
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_11_run_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.conf");
    std::fs::write(
        &config_path,
        "problem = logreg\nn = 30\ndim = 4\ndata_seed = 7\nmethod = rf-shampoo\n\
         mat_p = 2\nmat_d = 2\nsteps = 40\nseed = 5\nbatch = 10\nreduction = mean\n\
         beta1 = 0.05\nbeta2 = 0.05\n",
    )
    .unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");

    let bin = env!("CARGO_BIN_EXE_rootfree");
    for out in [&out1, &out2] {
        let status = std::process::Command::new(bin)
            .args(["run"])
            .arg(&config_path)
            .arg("--output")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success(), "run failed");
    }

    let strip_wall = |text: &str| -> String {
        text.lines()
            .map(|line| {
                let mut cols: Vec<&str> = line.split(',').collect();
                cols.pop();
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = std::fs::read_to_string(&out1).unwrap();
    let b = std::fs::read_to_string(&out2).unwrap();
    assert_eq!(strip_wall(&a), strip_wall(&b), "trajectories differ");
    assert_ne!(a.len(), 0);

    report(
        11,
        "repeated `run` invocations are byte-identical modulo the wall_ns column",
        start.elapsed(),
        Duration::from_secs(5),
    );
}
