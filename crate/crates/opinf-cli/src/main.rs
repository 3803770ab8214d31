use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opinf_cli::config::{default_config, ExperimentConfig, MethodSpec};
use opinf_cli::harness::{self, HarnessError};

/// Learn and evaluate reduced quadratic dynamical-system models from
/// simulated trajectory data.
#[derive(Parser)]
#[command(name = "opinf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON). Required unless the subcommand has
    /// a built-in experiment name.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MethodArgs {
    /// Method name: intrusive, plain, tikhonov, pir, or spir.
    #[arg(long)]
    method: String,
    /// Reduced dimension.
    #[arg(long)]
    dim: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate all full-order trajectories and export them as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute and persist the POD basis.
    Basis {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit one method at an explicit regularization weight.
    Learn {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Regularization weight (ignored by plain and intrusive).
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Sweep the weight grid with leave-one-out validation.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Evaluate a persisted family against the test set.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Run the full pipeline for a named experiment (synthetic, burgers,
    /// reaction-diffusion) or a custom config.
    Reproduce {
        /// Experiment name; ignored when --config is given.
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn parse_method(name: &str) -> Result<MethodSpec, HarnessError> {
    MethodSpec::parse(name).ok_or_else(|| {
        HarnessError::Config(format!(
            "unknown method {name}; expected intrusive, plain, tikhonov, pir, or spir"
        ))
    })
}

/// Usage-level failures (bad flags, unreadable paths, malformed configs)
/// exit with 2; numeric failures exit with 1.
fn exit_code_for(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) | HarnessError::Io(_) | HarnessError::MissingArtifact(..) => 2,
        HarnessError::Parse(_) | HarnessError::Core(_) | HarnessError::Fom(_) => 1,
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("OPINF_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    init_thread_pool();
    match cli.command {
        Command::Simulate { common } => {
            let config = load_config(&common.config, common.seed)?;
            harness::simulate_stage(&config, &common.out)?;
            println!("trajectories written to {}", common.out.display());
        }
        Command::Basis { common } => {
            let config = load_config(&common.config, common.seed)?;
            harness::basis_stage(&config, &common.out)?;
            println!("basis written to {}", common.out.join("basis").display());
        }
        Command::Learn {
            common,
            method,
            lambda,
        } => {
            let config = load_config(&common.config, common.seed)?;
            let method_spec = parse_method(&method.method)?;
            if !(lambda >= 0.0) || !lambda.is_finite() {
                return Err(HarnessError::Config(format!("invalid lambda {lambda}")));
            }
            harness::learn_stage(&config, method_spec, method.dim, lambda, &common.out)?;
            println!(
                "models written to {}",
                opinf_cli::io::model_dir(&common.out, method_spec.name(), method.dim).display()
            );
        }
        Command::Select { common, method } => {
            let config = load_config(&common.config, common.seed)?;
            let method_spec = parse_method(&method.method)?;
            let lambda = harness::select_stage(&config, method_spec, method.dim, &common.out)?;
            println!("selected lambda {lambda} for {} at n={}", method_spec.name(), method.dim);
        }
        Command::Evaluate { common, method } => {
            let config = load_config(&common.config, common.seed)?;
            let method_spec = parse_method(&method.method)?;
            let row = harness::evaluate_stage(&config, method_spec, method.dim, &common.out)?;
            println!(
                "{} n={}: e_train={}, e_test={}, diverged={}",
                row.method, row.dim, row.e_train, row.e_test, row.diverged
            );
        }
        Command::Reproduce {
            experiment,
            config,
            out,
            seed,
        } => {
            let config = match config {
                Some(path) => load_config(&path, seed)?,
                None => {
                    let mut c = default_config(&experiment, seed.unwrap_or(7)).ok_or_else(|| {
                        HarnessError::Config(format!(
                            "unknown experiment {experiment}; expected synthetic, burgers, or reaction-diffusion"
                        ))
                    })?;
                    if let Some(seed) = seed {
                        c.seed = seed;
                    }
                    c
                }
            };
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&experiment));
            let rows = harness::run_experiment(&config, &out)?;
            for row in &rows {
                println!(
                    "{} n={}: e_train={}, e_test={}, diverged={}",
                    row.method, row.dim, row.e_train, row.e_test, row.diverged
                );
            }
            println!("artifacts written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
