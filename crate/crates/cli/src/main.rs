//! `vqgp`: configuration-driven experiments on GP surrogates for noisy
//! variational-circuit cost functions. Every command is a pure function of
//! (config, seed): rerunning with the same inputs reproduces the outputs
//! byte for byte.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{CommandKind, ConfigError, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "vqgp",
    version,
    about = "GP surrogate experiments for variational quantum cost landscapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier spectra of cost lines at random centers and at the optimum
    Spectrum(RunArgs),
    /// Fit GP kernels to sampled training sets and report likelihoods
    Fit(RunArgs),
    /// Model-quality metrics over kernels, strategies, and training sizes
    Benchmark(RunArgs),
    /// Sequential line-search optimization runs with trajectory output
    Optimize(RunArgs),
    /// Generate an instance bundle (Hamiltonian, circuit, metadata)
    MakeInstance(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (also VQGP_WORKERS; the flag wins, default 1)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
        Command::Fit(a) => (CommandKind::Fit, a),
        Command::Benchmark(a) => (CommandKind::Benchmark, a),
        Command::Optimize(a) => (CommandKind::Optimize, a),
        Command::MakeInstance(a) => (CommandKind::MakeInstance, a),
    };
    let cfg = match prepare(kind, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::dispatch(kind, &cfg) {
        Ok(commands::Outcome::Clean) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Partial(n)) => {
            eprintln!("completed with {n} failed units");
            ExitCode::from(1)
        }
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<ConfigError>() {
                eprintln!("config error: {ce}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn prepare(kind: CommandKind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let workers = resolve_workers(args.workers)?;
    // a second build_global in-process (tests) keeps the first pool; fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    let cfg = ExperimentConfig::load(&args.config)?.resolve(args.seed, args.out.clone());
    cfg.validate(kind)?;
    Ok(cfg)
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, ConfigError> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    match std::env::var("VQGP_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .map(|w| w.max(1))
            .map_err(|_| ConfigError(format!("VQGP_WORKERS: \"{v}\" is not a number"))),
        Err(_) => Ok(1),
    }
}
