//! Command-line front-end: synthetic data, marginal fitting, lengthscale
//! estimation, joint simulation and verification.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rainfall_copula::Error;

use crate::commands::StrictViolation;
use crate::config::ConfigError;

#[derive(Parser)]
#[command(name = "rainfall-copula", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; inputs default to files inside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat warnings about boundary minimizers or non-convergence as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Override one configuration key, e.g. `--set m=10`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic study with known lengthscale and marginals.
    Synth,
    /// Fit the joint GLM marginals from features and rainfall.
    FitMarginals,
    /// Estimate the copula lengthscale by minimum energy score.
    EstimateTheta {
        /// Points in the coarse θ grid.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Draw joint rainfall ensembles for every day.
    Simulate,
    /// Verify an ensemble against the observations.
    Diagnose,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<StrictViolation>().is_some() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Ingest { .. } | Error::Io { .. } | Error::Invalid(_) | Error::DimensionMismatch(_)) => 2,
        Some(_) => 3,
        None => 4,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    let mut cfg = config::load(g.config.as_deref(), &g.set)?;
    if let Some(seed) = g.seed {
        cfg.score.seed = seed;
    }
    if let Some(out) = g.out {
        cfg.out = out;
    }
    if let Command::EstimateTheta { grid: Some(k) } = cli.command {
        cfg.search.grid_size = k;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be at least 1".into()).into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::FitMarginals => commands::fit_marginals(&cfg, g.strict),
        Command::EstimateTheta { .. } => commands::estimate_theta(&cfg, g.strict),
        Command::Simulate => commands::simulate(&cfg),
        Command::Diagnose => commands::diagnose(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
        Err(_) => {
            eprintln!("error: internal invariant violated");
            ExitCode::from(4)
        }
    }
}
