//! Experiment orchestration behind the command-line interface: running a
//! configured optimization and persisting its trajectory as CSV, dumping
//! Fisher estimates, and emitting verification suites as JSON.
//!
//! Exit codes are a stable contract: 0 success, 1 configuration error,
//! 2 divergence (or a failed verification), 3 I/O error.

use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::fisher::{emp_fisher_new, emp_fisher_scaled, emp_fisher_standard, exact_fisher, FisherEstimate};
use crate::optim::{run_optimizer, RunOptions, RunStatus, Trajectory};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Render a trajectory as CSV. Reals print in Rust's shortest
/// round-trippable form, locale independent.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::from("step,loss,grad_norm,param_norm,wall_ns\n");
    for r in &t.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.loss, r.grad_norm, r.param_norm, r.wall_ns
        ));
    }
    out
}

fn write_output(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

/// Execute a validated config end to end and write the trajectory CSV.
/// Returns the process exit code.
pub fn run_and_emit(cfg: &RunConfig, output_override: Option<&Path>) -> i32 {
    let problem = match cfg.build_problem() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let n = problem.num_samples();
    let hyper = cfg.resolved_hyper(n);
    let mu0 = vec![0.0; problem.dim()];
    let mut opts = RunOptions::new(cfg.steps, cfg.seed, cfg.effective_batch(n), mu0)
        .with_policy(cfg.policy());
    if let Some(init) = cfg.precond_init {
        opts = opts.with_precond_init(init);
    }

    let trajectory = match run_optimizer(problem.as_ref(), cfg.method, &hyper, &opts) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };

    let csv = trajectory_csv(&trajectory);
    let path = output_override.or(cfg.output.as_deref());
    if let Err(e) = write_output(path, &csv) {
        eprintln!("io error: {e}");
        return EXIT_IO;
    }

    match &trajectory.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::Diverged { at_step, reason } => {
            eprintln!("run diverged at step {at_step}: {reason}");
            EXIT_DIVERGED
        }
    }
}

/// Render a Fisher estimate as CSV (one matrix row per line, prefixed by a
/// comment line naming the construction).
pub fn fisher_csv(estimate: &FisherEstimate) -> String {
    let mut out = format!(
        "# kind={:?} n_or_b={}\n",
        estimate.kind, estimate.n_or_b
    );
    let m = &estimate.matrix;
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Compute the requested Fisher construction at μ = 0 for the configured
/// problem and write it as CSV. Returns the process exit code.
pub fn fisher_dump(cfg: &RunConfig, kind: &str, output_override: Option<&Path>) -> i32 {
    let problem = match cfg.build_problem() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mu = vec![0.0; problem.dim()];
    let n = problem.num_samples();
    let grads: Vec<Vec<f64>> = (0..n).map(|i| problem.per_sample_grad(&mu, i)).collect();
    let subset: Vec<usize> = (0..n).collect();
    let estimate = match kind {
        "standard" => emp_fisher_standard(&grads),
        "new" => emp_fisher_new(&grads),
        "scaled" => emp_fisher_scaled(&grads, n),
        "exact" => exact_fisher(problem.as_ref(), &mu, &subset),
        other => {
            eprintln!("config error: fisher kind must be standard|new|scaled|exact, got {other:?}");
            return EXIT_CONFIG;
        }
    };
    let estimate = match estimate {
        Ok(e) => e,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = write_output(output_override.or(cfg.output.as_deref()), &fisher_csv(&estimate))
    {
        eprintln!("io error: {e}");
        return EXIT_IO;
    }
    EXIT_OK
}

/// Run a named verification suite and emit the reports as a JSON array.
/// Exit code 0 when every check passes, 2 when any fails.
pub fn verify_suite(name: &str, output_override: Option<&Path>) -> i32 {
    let reports = match verify::suite(name) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    if let Err(e) = write_output(output_override, &json) {
        eprintln!("io error: {e}");
        return EXIT_IO;
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        let failed: Vec<&str> = reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.check.as_str())
            .collect();
        eprintln!("failed checks: {}", failed.join(", "));
        EXIT_DIVERGED
    }
}
