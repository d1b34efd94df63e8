use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rootfree::cli::{self, EXIT_CONFIG};
use rootfree::config::parse_config;
use rootfree::precision::{FloatFormat, PrecisionScope};

#[derive(Parser)]
#[command(name = "rootfree", version, about = "Square-root-free adaptive gradient methods: experiment runner and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured optimization and write the trajectory CSV.
    Run {
        /// Path to a flat `key = value` config file.
        config: PathBuf,
        /// Write the CSV here instead of the config's `output` (or stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the config's run seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's precision format (fp64|fp32|bf16|fp16).
        #[arg(long)]
        precision: Option<String>,
    },
    /// Run a verification suite and emit a JSON report array.
    Verify {
        /// affine | scale | unbiasedness | first-order | precision |
        /// sign-descent | all
        suite: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump a Fisher construction for the configured problem as CSV.
    FisherDump {
        config: PathBuf,
        /// standard | new | scaled | exact
        #[arg(long, default_value = "new")]
        kind: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf) -> Result<rootfree::config::RunConfig, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("io error: cannot read {}: {e}", path.display());
        cli::EXIT_IO
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match args.command {
        Command::Run {
            config,
            output,
            seed,
            precision,
        } => match load_config(&config) {
            Ok(mut cfg) => {
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                if let Some(name) = precision {
                    match FloatFormat::by_name(&name) {
                        Some(fmt) => {
                            cfg.precision = fmt;
                            if cfg.precision_scope == PrecisionScope::None
                                && fmt != FloatFormat::FP64
                            {
                                cfg.precision_scope = PrecisionScope::StateAndLinalg;
                            }
                        }
                        None => {
                            eprintln!("config error: unknown precision {name:?}");
                            return ExitCode::from(EXIT_CONFIG as u8);
                        }
                    }
                }
                cli::run_and_emit(&cfg, output.as_deref())
            }
            Err(code) => code,
        },
        Command::Verify { suite, output } => cli::verify_suite(&suite, output.as_deref()),
        Command::FisherDump {
            config,
            kind,
            output,
        } => match load_config(&config) {
            Ok(cfg) => cli::fisher_dump(&cfg, &kind, output.as_deref()),
            Err(code) => code,
        },
    };
    ExitCode::from(code as u8)
}
