//! Turns a validated config into engines and traces.

use std::sync::Arc;

use gtnsgdm_core::metrics::MetricsTrace;
use gtnsgdm_core::noise::RngStream;
use gtnsgdm_core::objective::{
    claim1_instance, generate_token_dataset, partition, regression_objective, GlobalObjective, Oracle,
};
use gtnsgdm_core::optim::{self, theorem1_hyper, theorem2_hyper, Hyper, RoundEngine, ScheduleInputs, ScheduledHyper};
use gtnsgdm_core::topology::{build_graph, weights_for, Graph, MixingMatrix, TopologyKind};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ObjectiveConfig, ScheduleRule};
use crate::error::CliError;

/// Everything shared by the repeats of one config.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mixing: Arc<MixingMatrix>,
    pub global: GlobalObjective,
    pub x0: Vec<f64>,
    pub batch: Option<usize>,
}

pub fn build_mixing(cfg: &ExperimentConfig) -> Result<MixingMatrix, CliError> {
    let topo = &cfg.topology;
    if topo.n == 1 {
        return Ok(MixingMatrix::averaging(1)?);
    }
    let graph = match topo.kind {
        TopologyKind::Custom => {
            let path = topo.file.as_ref().ok_or_else(|| CliError::invalid("topology.file", "missing"))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Graph::parse_adjacency(&text, Some(topo.n)).map_err(|e| CliError::invalid("topology.file", e.to_string()))?
        }
        kind => build_graph(kind, topo.n).map_err(|e| CliError::invalid("topology", e.to_string()))?,
    };
    weights_for(&graph, cfg.weighting()).map_err(|e| CliError::invalid("topology.weighting", e.to_string()))
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    match &cfg.objective {
        ObjectiveConfig::TukeyRegression { samples, dim, c, batch } => {
            let mixing = build_mixing(cfg)?;
            let ds = generate_token_dataset(*samples, *dim, cfg.seed)?;
            let locals = partition(&ds, cfg.topology.n, *c)?;
            Ok(Instance {
                mixing: Arc::new(mixing),
                global: regression_objective(&ds, &locals)?,
                x0: vec![0.0; *dim],
                batch: *batch,
            })
        }
        ObjectiveConfig::Claim1 { bound } => {
            let inst = claim1_instance(cfg.topology.n, *bound)?;
            let global = inst.global_objective()?;
            Ok(Instance {
                mixing: Arc::new(inst.mixing),
                global,
                x0: vec![inst.x0],
                batch: None,
            })
        }
    }
}

/// Hyperparameters after applying the optional theorem schedule for a run
/// of `rounds` rounds.
pub fn resolve_hyper(
    cfg: &ExperimentConfig,
    inst: &Instance,
    rounds: usize,
) -> Result<(Hyper, Option<ScheduledHyper>), CliError> {
    let Some(schedule) = &cfg.schedule else {
        return Ok((cfg.hyper, None));
    };
    let delta0 = schedule
        .delta0
        .unwrap_or_else(|| inst.global.loss(&inst.x0) - inst.global.f_star());
    let smoothness = schedule.smoothness.unwrap_or_else(|| inst.global.smoothness_bound());
    let inputs = ScheduleInputs {
        delta0,
        smoothness,
        lambda: inst.mixing.lambda(),
        nodes: inst.mixing.n(),
        rounds: rounds.max(1),
    };
    let scheduled = match schedule.rule {
        ScheduleRule::Theorem1 => theorem1_hyper(&inputs, schedule.p.unwrap_or(2.0)),
        ScheduleRule::Theorem2 => theorem2_hyper(&inputs),
    }
    .map_err(|e| CliError::invalid("schedule", e.to_string()))?;
    info!("scheduled alpha = {}, beta = {}", scheduled.alpha, scheduled.beta);
    Ok((cfg.hyper.with_alpha(scheduled.alpha).with_beta(scheduled.beta), Some(scheduled)))
}

pub fn build_engine(cfg: &ExperimentConfig, inst: &Instance, hyper: Hyper, seed: u64) -> Result<RoundEngine, CliError> {
    let oracles = inst
        .global
        .locals()
        .iter()
        .enumerate()
        .map(|(i, local)| Oracle::new(local.clone(), cfg.noise, inst.batch, RngStream::new(seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RoundEngine::new(inst.mixing.clone(), oracles, cfg.method, hyper, &inst.x0)?)
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: MetricsTrace,
    pub diverged: bool,
}

/// Seed used by repeat `r`.
pub fn repeat_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

/// One run per repeat, in repeat order. Divergence is recorded in the
/// result rather than returned as an error.
pub fn run_seeds(cfg: &ExperimentConfig, inst: &Instance, rounds: usize) -> Result<Vec<SeedRun>, CliError> {
    let (hyper, _) = resolve_hyper(cfg, inst, rounds)?;
    (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = repeat_seed(cfg.seed, r);
            let mut engine = build_engine(cfg, inst, hyper, seed)?;
            match optim::run(&mut engine, rounds, cfg.probe_every, &inst.global) {
                Ok(trace) => Ok(SeedRun {
                    seed,
                    trace,
                    diverged: false,
                }),
                Err(gtnsgdm_core::Error::Diverged { round, trace }) => {
                    warn!("seed {seed} diverged at round {round}");
                    Ok(SeedRun {
                        seed,
                        trace: *trace,
                        diverged: true,
                    })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// Mean and sample std of the final estimation error over the runs that
/// did not diverge, plus the number that did.
pub fn final_error_stats(runs: &[SeedRun]) -> (f64, f64, usize) {
    let finals: Vec<f64> = runs.iter().filter(|r| !r.diverged).map(|r| r.trace.final_error()).collect();
    let diverged = runs.len() - finals.len();
    if finals.is_empty() {
        return (f64::NAN, f64::NAN, diverged);
    }
    let (m, s) = gtnsgdm_core::metrics::mean_std(&finals);
    (m, s, diverged)
}
