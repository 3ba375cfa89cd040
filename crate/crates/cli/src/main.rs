//! `scs`: generate snapshots, run a recovery method over the sample
//! schedule, and aggregate trial-averaged error reports.
//!
//! Exit codes: 0 on success, 2 when every step finished but some solve hit
//! an iteration cap, 1 on error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sparse_chaos::config::ExperimentConfig;
use sparse_chaos::pipeline::{self, Method};

#[derive(Parser, Debug)]
#[command(name = "scs", version, about = "Sparse polynomial-chaos recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw samples, solve the PDE at each one and write snapshot files.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one method on every trial and sample count.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// scs, pcs or mc.
        #[arg(long)]
        method: Method,
        /// Directory holding the generated snapshots; results go here too.
        #[arg(long)]
        out: PathBuf,
    },
    /// Average result files over trials and write CSV and plot tables.
    Report {
        /// Output directory; also searched for results_*.csv when no
        /// result files are given.
        #[arg(long)]
        out: PathBuf,
        results: Vec<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn discover_results(dir: &Path) -> Result<Vec<PathBuf>> {
    let found: Vec<PathBuf> = Method::ALL
        .iter()
        .map(|&m| pipeline::results_path(dir, m))
        .filter(|p| p.exists())
        .collect();
    anyhow::ensure!(!found.is_empty(), "no results_*.csv files in {}", dir.display());
    Ok(found)
}

/// Returns whether any run was flagged as not converged.
fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = load_config(&config)?;
            let s = pipeline::generate(&cfg, &out)?;
            println!(
                "generated {} trials of {} samples on {} nodes in {} (config {})",
                s.trials,
                s.samples_per_trial,
                s.nodes,
                out.display(),
                cfg.config_id()
            );
            Ok(false)
        }
        Command::Solve { config, method, out } => {
            let cfg = load_config(&config)?;
            let s = pipeline::solve(&cfg, &out, method)?;
            let flagged = s.not_converged();
            println!(
                "{method}: {} runs written to {}, {flagged} not converged",
                s.results.len(),
                pipeline::results_path(&out, method).display()
            );
            Ok(flagged > 0)
        }
        Command::Report { out, results } => {
            let inputs = if results.is_empty() {
                discover_results(&out)?
            } else {
                results
            };
            let rows = pipeline::report(&inputs, &out)?;
            for r in &rows {
                println!(
                    "{:<4} m={:<5} trials={:<3} mean {:.3e} std {:.3e} not_converged {}",
                    r.method, r.m, r.trials, r.rel_err_mean, r.rel_err_std, r.not_converged
                );
            }
            Ok(rows.iter().any(|r| r.not_converged > 0))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
