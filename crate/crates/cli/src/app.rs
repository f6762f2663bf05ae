//! Command-line surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::run::{load_config, run, RunContext, RunError};

#[derive(Debug, Parser)]
#[command(name = "bqo", version, about = "Run search, tour, cavity and noise experiments from config files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Bayesian search simulation ([search] block).
    Search(RunArgs),
    /// Elastic-net tour with baselines ([tsp] block).
    Tsp(RunArgs),
    /// Cavity-qubit density-matrix simulation ([qsim] block).
    Qsim(RunArgs),
    /// Gaussian-process noise sampling ([noise] block).
    Noise(RunArgs),
    /// Several configs in parallel, each in its own subdirectory of --out.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's output_path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long = "config", required = true)]
    pub configs: Vec<PathBuf>,
    #[arg(long, default_value = "batch")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run_one(path: &Path, requested: Option<&str>, out: Option<PathBuf>, seed: Option<u64>, quiet: bool) -> Result<PathBuf, RunError> {
    let mut cfg = load_config(path)?;
    if let Some(requested) = requested {
        if cfg.command.name() != requested {
            return Err(RunError::CommandMismatch {
                requested: requested.to_string(),
                found: cfg.command.name().to_string(),
            });
        }
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_path));
    let ctx = RunContext {
        out_dir: out_dir.clone(),
        base_dir: base_dir(path),
    };
    let summary = run(&cfg, &ctx)?;
    if !quiet {
        for w in &summary.warnings {
            eprintln!("warning: {w}");
        }
        eprintln!("{}: wrote {} to {}", path.display(), summary.files.join(", "), out_dir.display());
    }
    Ok(out_dir)
}

/// Runs the parsed command line and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let (name, args) = match cli.command {
        CliCommand::Search(a) => ("search", a),
        CliCommand::Tsp(a) => ("tsp", a),
        CliCommand::Qsim(a) => ("qsim", a),
        CliCommand::Noise(a) => ("noise", a),
        CliCommand::Batch(b) => return execute_batch(b),
    };
    match run_one(&args.config, Some(name), args.out, args.seed, args.quiet) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute_batch(b: BatchArgs) -> i32 {
    let results: Vec<(PathBuf, Result<PathBuf, RunError>)> = b
        .configs
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
            let dir = b.out.join(format!("{i:03}_{stem}"));
            (path.clone(), run_one(path, None, Some(dir), b.seed, b.quiet))
        })
        .collect();
    let mut status = 0;
    for (path, r) in results {
        if let Err(e) = r {
            eprintln!("error: {}: {e}", path.display());
            status = status.max(e.exit_code());
        }
    }
    status
}
