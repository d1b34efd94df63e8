//! Flat `key = value` run configuration: parsing, validation, and the
//! inverse serialization. One run per file; unknown keys are rejected, type
//! errors carry line numbers, and constraint violations name the violated
//! invariant.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::Mat;
use crate::optim::{ExpMode, Hyper, Method};
use crate::precision::{FloatFormat, PrecisionPolicy, PrecisionScope};
use crate::problems::{
    logreg_from_csv, synthetic_logreg, synthetic_matfact, quadratic_make, Problem, Reduction,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown key {key:?} (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: cannot parse {value:?} as {expected} for key {key:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key {0:?}")]
    MissingKey(&'static str),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("problem construction failed: {0}")]
    Problem(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Which test problem a run trains on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// Seeded random SPD quadratic of the given dimension.
    Quadratic { dim: usize, seed: u64 },
    /// Seeded synthetic logistic regression.
    Logreg {
        n: usize,
        dim: usize,
        reg: f64,
        seed: u64,
        mat_shape: Option<(usize, usize)>,
    },
    /// Seeded synthetic matrix least squares.
    Matfact {
        p: usize,
        d: usize,
        n: usize,
        noise: f64,
        seed: u64,
    },
    /// Logistic regression read from a CSV file (header row, label last).
    LogregCsv { path: PathBuf, reg: f64 },
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    pub hyper: Hyper,
    pub steps: usize,
    pub seed: u64,
    /// `usize::MAX` means full batch.
    pub batch_size: usize,
    /// Explicit Fisher batch factor; when absent it resolves to the
    /// effective batch size under mean reduction and 1 under sum.
    pub fisher_b: Option<usize>,
    pub precision: FloatFormat,
    pub precision_scope: PrecisionScope,
    /// Accumulator init override; method default when absent.
    pub precond_init: Option<f64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn policy(&self) -> PrecisionPolicy {
        PrecisionPolicy::new(self.precision, self.precision_scope)
    }

    /// Effective mini-batch size once the sample count is known.
    pub fn effective_batch(&self, n_samples: usize) -> usize {
        self.batch_size.min(n_samples).max(1)
    }

    /// Hyperparameters with the Fisher factor resolved against the problem.
    pub fn resolved_hyper(&self, n_samples: usize) -> Hyper {
        let b = self.fisher_b.unwrap_or(match self.hyper.reduction {
            Reduction::Sum => 1,
            Reduction::Mean => self.effective_batch(n_samples),
        });
        Hyper { b, ..self.hyper.clone() }
    }

    /// Build the configured problem instance.
    pub fn build_problem(&self) -> Result<Box<dyn Problem>> {
        match &self.problem {
            ProblemSpec::Quadratic { dim, seed } => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let raw = Mat::from_fn(*dim, *dim, |_, _| rng.gen_range(-1.0..1.0));
                let q = raw.matmul(&raw.transpose()).add_scaled_identity(0.5);
                let b: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let p = quadratic_make(q, b)
                    .map_err(|e| ConfigError::Problem(e.to_string()))?
                    .with_reduction(self.hyper.reduction);
                Ok(Box::new(p))
            }
            ProblemSpec::Logreg {
                n,
                dim,
                reg,
                seed,
                mat_shape,
            } => {
                let mut p = synthetic_logreg(*n, *dim, *reg, *seed);
                if let Some((rows, cols)) = mat_shape {
                    p = p
                        .with_mat_shape(*rows, *cols)
                        .map_err(|e| ConfigError::Problem(e.to_string()))?;
                }
                Ok(Box::new(p.with_reduction(self.hyper.reduction)))
            }
            ProblemSpec::Matfact { p, d, n, noise, seed } => Ok(Box::new(
                synthetic_matfact(*p, *d, *n, *noise, *seed).with_reduction(self.hyper.reduction),
            )),
            ProblemSpec::LogregCsv { path, reg } => {
                let p = logreg_from_csv(path, *reg)
                    .map_err(|e| ConfigError::Problem(e.to_string()))?;
                Ok(Box::new(p.with_reduction(self.hyper.reduction)))
            }
        }
    }
}

struct RawEntry {
    line: usize,
    value: String,
    used: bool,
}

struct RawConfig {
    entries: Vec<(String, RawEntry)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut entries: Vec<(String, RawEntry)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Malformed {
                    line,
                    text: trimmed.to_string(),
                });
            }
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::DuplicateKey { key, line });
            }
            entries.push((
                key,
                RawEntry {
                    line,
                    value,
                    used: false,
                },
            ));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        for (k, entry) in &mut self.entries {
            if k == key {
                entry.used = true;
                return Some((entry.line, entry.value.clone()));
            }
        }
        None
    }

    fn reject_unused(&self) -> Result<()> {
        for (key, entry) in &self.entries {
            if !entry.used {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    line: entry.line,
                });
            }
        }
        Ok(())
    }
}

fn parse_typed<T: std::str::FromStr>(
    raw: Option<(usize, String)>,
    key: &str,
    expected: &'static str,
    default: T,
) -> Result<T> {
    match raw {
        None => Ok(default),
        Some((line, value)) => value.parse::<T>().map_err(|_| ConfigError::BadValue {
            line,
            key: key.to_string(),
            value,
            expected,
        }),
    }
}

fn parse_with<T>(
    raw: Option<(usize, String)>,
    key: &str,
    expected: &'static str,
    default: T,
    f: impl Fn(&str) -> Option<T>,
) -> Result<T> {
    match raw {
        None => Ok(default),
        Some((line, value)) => f(&value).ok_or(ConfigError::BadValue {
            line,
            key: key.to_string(),
            value,
            expected,
        }),
    }
}

/// Parse and validate a flat `key = value` configuration.
///
/// Defaults mirror the update rules' published forms: `beta2 = 0.999`,
/// `gamma = 1`, `lambda = 1e-8`, `kappa = 0`, `alpha1 = 0`, square-root-free
/// inits of one/identity and root-based inits of zero (via the method
/// default), `fisher_b` equal to the batch size for mean reduction and 1
/// for sum.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = RawConfig::parse(text)?;

    let (_, problem_kind) = raw
        .take("problem")
        .ok_or(ConfigError::MissingKey("problem"))?;
    let (method_line, method_name) = raw
        .take("method")
        .ok_or(ConfigError::MissingKey("method"))?;
    let method = Method::by_name(&method_name).map_err(|_| ConfigError::BadValue {
        line: method_line,
        key: "method".into(),
        value: method_name.clone(),
        expected: "one of sgd|rmsprop|rf-rmsprop|adagrad-full|rf-adagrad-full|shampoo|rf-shampoo|if-shampoo",
    })?;

    let steps = parse_typed(raw.take("steps"), "steps", "non-negative integer", 100usize)?;
    let seed = parse_typed(raw.take("seed"), "seed", "unsigned integer", 0u64)?;
    let batch_size = parse_typed(raw.take("batch"), "batch", "positive integer", 0usize)?;

    let reduction = parse_with(
        raw.take("reduction"),
        "reduction",
        "sum|mean",
        Reduction::Sum,
        Reduction::by_name,
    )?;
    let exp_mode = parse_with(
        raw.take("exp_mode"),
        "exp_mode",
        "trunc1|exact",
        ExpMode::Trunc1,
        ExpMode::by_name,
    )?;

    let data_seed = parse_typed(raw.take("data_seed"), "data_seed", "unsigned integer", 42u64)?;
    let problem = match problem_kind.as_str() {
        "quadratic" => ProblemSpec::Quadratic {
            dim: parse_typed(raw.take("dim"), "dim", "positive integer", 4usize)?,
            seed: data_seed,
        },
        "logreg" => {
            let mat_p = parse_typed(raw.take("mat_p"), "mat_p", "positive integer", 0usize)?;
            let mat_d = parse_typed(raw.take("mat_d"), "mat_d", "positive integer", 0usize)?;
            let mat_shape = match (mat_p, mat_d) {
                (0, 0) => None,
                (p, d) if p > 0 && d > 0 => Some((p, d)),
                _ => {
                    return Err(ConfigError::Constraint(
                        "mat_p and mat_d must be given together".into(),
                    ))
                }
            };
            ProblemSpec::Logreg {
                n: parse_typed(raw.take("n"), "n", "positive integer", 50usize)?,
                dim: parse_typed(raw.take("dim"), "dim", "positive integer", 4usize)?,
                reg: parse_typed(raw.take("reg"), "reg", "real", 0.0f64)?,
                seed: data_seed,
                mat_shape,
            }
        }
        "matfact" => ProblemSpec::Matfact {
            p: parse_typed(raw.take("mat_p"), "mat_p", "positive integer", 4usize)?,
            d: parse_typed(raw.take("mat_d"), "mat_d", "positive integer", 3usize)?,
            n: parse_typed(raw.take("n"), "n", "positive integer", 16usize)?,
            noise: parse_typed(raw.take("noise"), "noise", "real", 0.1f64)?,
            seed: data_seed,
        },
        "logreg-csv" => {
            let (_, path) = raw
                .take("csv_path")
                .ok_or(ConfigError::MissingKey("csv_path"))?;
            ProblemSpec::LogregCsv {
                path: PathBuf::from(path),
                reg: parse_typed(raw.take("reg"), "reg", "real", 0.0f64)?,
            }
        }
        other => {
            return Err(ConfigError::Constraint(format!(
                "problem must be quadratic|logreg|matfact|logreg-csv, got {other:?}"
            )))
        }
    };

    let batch_size = if batch_size == 0 { usize::MAX } else { batch_size };
    let fisher_b = match raw.take("fisher_b") {
        None => None,
        Some((line, value)) => Some(value.parse::<usize>().map_err(|_| ConfigError::BadValue {
            line,
            key: "fisher_b".into(),
            value,
            expected: "positive integer",
        })?),
    };

    let hyper = Hyper {
        beta1: parse_typed(raw.take("beta1"), "beta1", "real", 0.01f64)?,
        beta2: parse_typed(raw.take("beta2"), "beta2", "real", 0.999f64)?,
        gamma: parse_typed(raw.take("gamma"), "gamma", "real", 1.0f64)?,
        lambda: parse_typed(raw.take("lambda"), "lambda", "real", 1e-8f64)?,
        kappa: parse_typed(raw.take("kappa"), "kappa", "real", 0.0f64)?,
        alpha1: parse_typed(raw.take("alpha1"), "alpha1", "real", 0.0f64)?,
        b: fisher_b.unwrap_or(1),
        reduction,
        exp_mode,
    };

    let precision = parse_with(
        raw.take("precision"),
        "precision",
        "fp64|fp32|bf16|fp16",
        FloatFormat::FP64,
        FloatFormat::by_name,
    )?;
    let precision_scope = parse_with(
        raw.take("precision_scope"),
        "precision_scope",
        "none|state-only|state-and-linalg",
        PrecisionScope::None,
        PrecisionScope::by_name,
    )?;

    let precond_init = match raw.take("precond_init") {
        None => None,
        Some((line, value)) => Some(value.parse::<f64>().map_err(|_| ConfigError::BadValue {
            line,
            key: "precond_init".into(),
            value,
            expected: "real",
        })?),
    };

    let output = raw.take("output").map(|(_, v)| PathBuf::from(v));

    raw.reject_unused()?;

    hyper
        .validate()
        .map_err(|e| ConfigError::Constraint(e.to_string()))?;
    if let Some(init) = precond_init {
        if init < 0.0 {
            return Err(ConfigError::Constraint("precond_init ≥ 0".into()));
        }
    }

    Ok(RunConfig {
        problem,
        method,
        hyper,
        steps,
        seed,
        batch_size,
        fisher_b,
        precision,
        precision_scope,
        precond_init,
        output,
    })
}

impl fmt::Display for RunConfig {
    /// Serialize back to the flat format; `parse_config` of the output
    /// reproduces the config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.problem {
            ProblemSpec::Quadratic { dim, seed } => {
                writeln!(f, "problem = quadratic")?;
                writeln!(f, "dim = {dim}")?;
                writeln!(f, "data_seed = {seed}")?;
            }
            ProblemSpec::Logreg {
                n,
                dim,
                reg,
                seed,
                mat_shape,
            } => {
                writeln!(f, "problem = logreg")?;
                writeln!(f, "n = {n}")?;
                writeln!(f, "dim = {dim}")?;
                writeln!(f, "reg = {reg}")?;
                writeln!(f, "data_seed = {seed}")?;
                if let Some((p, d)) = mat_shape {
                    writeln!(f, "mat_p = {p}")?;
                    writeln!(f, "mat_d = {d}")?;
                }
            }
            ProblemSpec::Matfact { p, d, n, noise, seed } => {
                writeln!(f, "problem = matfact")?;
                writeln!(f, "mat_p = {p}")?;
                writeln!(f, "mat_d = {d}")?;
                writeln!(f, "n = {n}")?;
                writeln!(f, "noise = {noise}")?;
                writeln!(f, "data_seed = {seed}")?;
            }
            ProblemSpec::LogregCsv { path, reg } => {
                writeln!(f, "problem = logreg-csv")?;
                writeln!(f, "csv_path = {}", path.display())?;
                writeln!(f, "reg = {reg}")?;
            }
        }
        writeln!(f, "method = {}", self.method.as_str())?;
        writeln!(f, "steps = {}", self.steps)?;
        writeln!(f, "seed = {}", self.seed)?;
        if self.batch_size != usize::MAX {
            writeln!(f, "batch = {}", self.batch_size)?;
        }
        writeln!(f, "reduction = {}", self.hyper.reduction.as_str())?;
        writeln!(f, "exp_mode = {}", self.hyper.exp_mode.as_str())?;
        writeln!(f, "beta1 = {}", self.hyper.beta1)?;
        writeln!(f, "beta2 = {}", self.hyper.beta2)?;
        writeln!(f, "gamma = {}", self.hyper.gamma)?;
        writeln!(f, "lambda = {}", self.hyper.lambda)?;
        writeln!(f, "kappa = {}", self.hyper.kappa)?;
        writeln!(f, "alpha1 = {}", self.hyper.alpha1)?;
        if let Some(b) = self.fisher_b {
            writeln!(f, "fisher_b = {b}")?;
        }
        writeln!(f, "precision = {}", self.precision.name)?;
        writeln!(f, "precision_scope = {}", self.precision_scope.as_str())?;
        if let Some(init) = self.precond_init {
            writeln!(f, "precond_init = {init}")?;
        }
        if let Some(output) = &self.output {
            writeln!(f, "output = {}", output.display())?;
        }
        Ok(())
    }
}
