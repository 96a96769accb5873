//! Command-line surface and dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{
    cmd_claim1, cmd_grid, cmd_noise_diag, cmd_rate_check, cmd_run, cmd_sweep, cmd_topo_info, sweep_to_csv, Claim1Args,
};
use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::CliError;
use crate::grid::Grid;

#[derive(Debug, Parser)]
#[command(name = "gtnsgdm", version, about = "Decentralized heavy-tailed optimization experiments")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every repeat of the config and aggregate.
    Run,
    /// Vary one axis of the config.
    Sweep {
        /// lambda (topology kinds), sigma (noise levels) or n (node counts).
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma-separated values; defaults to the config's [sweep] table.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
    },
    /// Grid search over hyperparameters.
    Grid {
        /// TOML file of value sets; defaults to the built-in search sets.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Normalization-without-tracking counterexample.
    Claim1 {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        /// VN-DSGD step size.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        gt_alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        gt_beta: f64,
        #[arg(long, default_value_t = 1000)]
        gt_rounds: usize,
    },
    /// Empirical rate under a theorem schedule.
    RateCheck {
        /// Comma-separated horizons T (at least three).
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
    },
    /// Histogram and tail diagnostics of the config's noise law.
    NoiseDiag {
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
    },
    /// Spectral gap of the config's mixing matrix.
    TopoInfo,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::invalid("--config", "this subcommand needs a config file"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs the parsed command and returns the text to print.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match cli.threads {
        Some(0) => Err(CliError::invalid("--threads", "must be positive")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::invalid("--threads", e.to_string()))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let out: &Path = &cli.out;
    match &cli.command {
        Command::Run => {
            let cfg = load_config(cli)?;
            let output = cmd_run(&cfg, out)?;
            let summary = output.summary();
            if output.diverged() > 0 {
                println!("{summary}");
                return Err(CliError::Diverged {
                    runs: output.diverged(),
                });
            }
            Ok(summary)
        }
        Command::Sweep { axis, values } => {
            let cfg = load_config(cli)?;
            let axis = axis
                .or(cfg.sweep.as_ref().map(|s| s.axis))
                .ok_or_else(|| CliError::invalid("sweep.axis", "give --axis or a [sweep] table"))?;
            let values = values
                .clone()
                .or_else(|| cfg.sweep.as_ref().map(|s| s.values.clone()))
                .ok_or_else(|| CliError::invalid("sweep.values", "give --values or a [sweep] table"))?;
            let rows = cmd_sweep(&cfg, axis, &values, out)?;
            Ok(sweep_to_csv(&rows).trim_end().to_string())
        }
        Command::Grid { grid } => {
            let cfg = load_config(cli)?;
            let grid = match grid {
                Some(path) => Grid::load(path)?,
                None => Grid::defaults_for(cfg.method),
            };
            let rows = cmd_grid(&cfg, &grid, out)?;
            let best = &rows[0];
            Ok(format!(
                "{} grid points; best alpha = {}, beta = {}, tau = {}, c_phi = {}, score = {:.6e}",
                rows.len(),
                best.hyper.alpha,
                best.hyper.beta,
                best.hyper.tau,
                best.hyper.c_phi,
                best.score_mean
            ))
        }
        Command::Claim1 {
            n,
            bound,
            rounds,
            alpha,
            gt_alpha,
            gt_beta,
            gt_rounds,
        } => {
            let report = cmd_claim1(
                Claim1Args {
                    n: *n,
                    bound: *bound,
                    rounds: *rounds,
                    vanilla_alpha: *alpha,
                    tracking_alpha: *gt_alpha,
                    tracking_beta: *gt_beta,
                    tracking_rounds: *gt_rounds,
                },
                out,
            )?;
            let summary = report.summary();
            if let Err(e) = report.check() {
                println!("{summary}");
                return Err(e);
            }
            Ok(summary)
        }
        Command::RateCheck { horizons } => {
            let cfg = load_config(cli)?;
            Ok(cmd_rate_check(&cfg, horizons, out)?.summary())
        }
        Command::NoiseDiag { draws } => {
            let cfg = load_config(cli)?;
            Ok(cmd_noise_diag(&cfg, *draws, out)?.summary())
        }
        Command::TopoInfo => cmd_topo_info(&load_config(cli)?),
    }
}
