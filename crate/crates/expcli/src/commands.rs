//! Subcommand implementations. Each writes its CSV files under `out` and
//! returns a report for the caller to print.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gtnsgdm_core::metrics::{self, aggregate, aggregate_to_csv, fit_rate, fmt_f64, AggregateRow};
use gtnsgdm_core::noise::{empirical_moment, histogram, tail_slope, NoiseSpec, RngStream};
use gtnsgdm_core::objective::{claim1_instance, GlobalObjective, LocalObjective, Oracle};
use gtnsgdm_core::optim::schedule::{theorem1_exponent, theorem2_exponent};
use gtnsgdm_core::optim::{Hyper, Method, RoundEngine};
use gtnsgdm_core::topology::TopologyKind;
use log::warn;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ScheduleRule, SweepAxis};
use crate::error::CliError;
use crate::experiment::{build_instance, build_mixing, final_error_stats, resolve_hyper, run_seeds, SeedRun};
use crate::grid::Grid;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<SeedRun>,
    pub aggregate: Vec<AggregateRow>,
    pub trace_paths: Vec<PathBuf>,
    pub aggregate_path: PathBuf,
}

impl RunOutput {
    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged).count()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            let last = r.trace.last().expect("traces hold the initial probe");
            let _ = writeln!(
                s,
                "seed {}: t = {}, estimation_error = {:.6e}, avg_grad_norm = {:.6e}{}",
                r.seed,
                last.t,
                last.estimation_error,
                last.avg_grad_norm,
                if r.diverged { " (diverged)" } else { "" }
            );
        }
        let _ = write!(s, "aggregate: {}", self.aggregate_path.display());
        s
    }
}

/// Runs every repeat of `cfg`, writing `trace_seed<seed>.csv` per repeat
/// and `aggregate.csv`.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, CliError> {
    let inst = build_instance(cfg)?;
    let runs = run_seeds(cfg, &inst, cfg.rounds)?;
    let mut trace_paths = Vec::with_capacity(runs.len());
    for r in &runs {
        trace_paths.push(write_file(out, &format!("trace_seed{}.csv", r.seed), &r.trace.to_csv())?);
    }
    let traces: Vec<_> = runs.iter().map(|r| r.trace.clone()).collect();
    let agg = aggregate(&traces);
    let aggregate_path = write_file(out, "aggregate.csv", &aggregate_to_csv(&agg))?;
    Ok(RunOutput {
        runs,
        aggregate: agg,
        trace_paths,
        aggregate_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub lambda: f64,
    pub final_error_mean: f64,
    pub final_error_std: f64,
    pub diverged: usize,
}

pub const SWEEP_HEADER: &str = "value,lambda,final_error_mean,final_error_std,diverged";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.value,
            fmt_f64(r.lambda),
            fmt_f64(r.final_error_mean),
            fmt_f64(r.final_error_std),
            r.diverged
        );
    }
    out
}

/// Config with one sweep value applied.
pub fn apply_sweep_value(cfg: &ExperimentConfig, axis: SweepAxis, value: &str) -> Result<ExperimentConfig, CliError> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Lambda => {
            c.topology.kind = value
                .parse::<TopologyKind>()
                .map_err(|e| CliError::invalid("sweep.values", e.to_string()))?;
            c.topology.weighting = None;
        }
        SweepAxis::Sigma => {
            let level: f64 = value
                .parse()
                .map_err(|_| CliError::invalid("sweep.values", format!("`{value}` is not a number")))?;
            if c.noise == NoiseSpec::None {
                return Err(CliError::invalid("noise", "a sigma sweep needs a noise family"));
            }
            c.noise = c.noise.with_level(level);
        }
        SweepAxis::N => {
            c.topology.n = value
                .parse()
                .map_err(|_| CliError::invalid("sweep.values", format!("`{value}` is not a node count")))?;
        }
    }
    c.sweep = None;
    c.validate()?;
    Ok(c)
}

/// One run set per value; writes `sweep_<axis>.csv` and one aggregate CSV
/// per value.
pub fn cmd_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[String], out: &Path) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::invalid("sweep.values", "must not be empty"));
    }
    let axis_name = match axis {
        SweepAxis::Lambda => "lambda",
        SweepAxis::Sigma => "sigma",
        SweepAxis::N => "n",
    };
    let configs = values
        .iter()
        .map(|v| apply_sweep_value(cfg, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    let results = configs
        .par_iter()
        .map(|c| {
            let inst = build_instance(c)?;
            let runs = run_seeds(c, &inst, c.rounds)?;
            Ok((inst.mixing.lambda(), runs))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (value, (lambda, runs)) in values.iter().zip(results) {
        let traces: Vec<_> = runs.iter().map(|r| r.trace.clone()).collect();
        write_file(
            out,
            &format!("sweep_{axis_name}_{value}_aggregate.csv"),
            &aggregate_to_csv(&aggregate(&traces)),
        )?;
        let (m, s, diverged) = final_error_stats(&runs);
        rows.push(SweepRow {
            value: value.clone(),
            lambda,
            final_error_mean: m,
            final_error_std: s,
            diverged,
        });
    }
    write_file(out, &format!("sweep_{axis_name}.csv"), &sweep_to_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub hyper: Hyper,
    pub score_mean: f64,
    pub score_std: f64,
    pub diverged: usize,
}

pub const GRID_HEADER: &str = "rank,alpha,beta,tau,beta1,beta2,g_cap,eps,mu,c_phi,score_mean,score_std,diverged";

pub fn grid_to_csv(rows: &[GridRow]) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for (rank, r) in rows.iter().enumerate() {
        let h = &r.hyper;
        let _ = write!(out, "{}", rank + 1);
        for v in [h.alpha, h.beta, h.tau, h.beta1, h.beta2, h.g_cap, h.eps, h.mu, h.c_phi, r.score_mean, r.score_std] {
            let _ = write!(out, ",{}", fmt_f64(v));
        }
        let _ = writeln!(out, ",{}", r.diverged);
    }
    out
}

/// Evaluates every grid point and ranks by final estimation error, or by
/// final `avg_grad_norm` for the quadratic counterexample. Diverged or
/// non-finite points rank last.
pub fn cmd_grid(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<Vec<GridRow>, CliError> {
    let points = grid.expand(cfg.hyper)?;
    for h in &points {
        h.validate(cfg.method).map_err(|e| CliError::invalid("grid", e.to_string()))?;
    }
    let by_grad = matches!(cfg.objective, crate::config::ObjectiveConfig::Claim1 { .. });
    let inst = build_instance(cfg)?;
    let mut rows = points
        .par_iter()
        .map(|h| {
            let mut c = cfg.clone();
            c.hyper = *h;
            c.schedule = None;
            let runs = run_seeds(&c, &inst, c.rounds)?;
            let (score_mean, score_std, diverged) = if by_grad {
                let finals: Vec<f64> = runs
                    .iter()
                    .filter(|r| !r.diverged)
                    .map(|r| r.trace.last().map_or(f64::NAN, |row| row.avg_grad_norm))
                    .collect();
                let (m, s) = if finals.is_empty() { (f64::NAN, f64::NAN) } else { metrics::mean_std(&finals) };
                (m, s, runs.len() - finals.len())
            } else {
                final_error_stats(&runs)
            };
            Ok(GridRow {
                hyper: *h,
                score_mean,
                score_std,
                diverged,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let key = |r: &GridRow| {
        if r.diverged > 0 || !r.score_mean.is_finite() {
            f64::INFINITY
        } else {
            r.score_mean
        }
    };
    rows.sort_by(|a, b| key(a).total_cmp(&key(b)));
    write_file(out, "grid.csv", &grid_to_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim1MethodReport {
    pub method: Method,
    pub alpha: f64,
    pub rounds: usize,
    /// `(1/(nT)) Σ_{t<T} Σ_i ‖∇f(x_i^t)‖`.
    pub time_avg_grad_norm: f64,
    pub bit_constant: bool,
    /// First round whose iterates have `avg_grad_norm < 2α`.
    pub first_below_two_alpha: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim1Report {
    pub n: usize,
    pub bound: f64,
    pub vanilla: Claim1MethodReport,
    pub tracking: Claim1MethodReport,
}

impl Claim1Report {
    pub fn check(&self) -> Result<(), CliError> {
        if !(self.vanilla.time_avg_grad_norm >= self.bound) {
            return Err(CliError::Assertion(format!(
                "vn-dsgd time-averaged gradient norm {} is below B = {}",
                self.vanilla.time_avg_grad_norm, self.bound
            )));
        }
        if !self.vanilla.bit_constant {
            return Err(CliError::Assertion("vn-dsgd iterates moved".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,alpha,rounds,time_avg_grad_norm,bit_constant,first_below_two_alpha\n");
        for r in [&self.vanilla, &self.tracking] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                fmt_f64(r.alpha),
                r.rounds,
                fmt_f64(r.time_avg_grad_norm),
                u8::from(r.bit_constant),
                r.first_below_two_alpha.map_or(String::new(), |t| t.to_string())
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!("claim1 instance: n = {}, B = {}\n", self.n, self.bound);
        for r in [&self.vanilla, &self.tracking] {
            let _ = writeln!(
                s,
                "{:>9}: alpha = {}, T = {}, time-averaged grad norm = {:.6}, bit-constant = {}, first t with avg_grad_norm < 2 alpha = {}",
                r.method.as_str(),
                r.alpha,
                r.rounds,
                r.time_avg_grad_norm,
                r.bit_constant,
                r.first_below_two_alpha.map_or("none".to_string(), |t| t.to_string())
            );
        }
        s.pop();
        s
    }
}

/// Parameters of the `claim1` subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Claim1Args {
    pub n: usize,
    pub bound: f64,
    pub rounds: usize,
    pub vanilla_alpha: f64,
    pub tracking_alpha: f64,
    pub tracking_beta: f64,
    pub tracking_rounds: usize,
}

impl Default for Claim1Args {
    fn default() -> Self {
        Self {
            n: 2,
            bound: 1.0,
            rounds: 100,
            vanilla_alpha: 0.1,
            tracking_alpha: 0.01,
            tracking_beta: 0.0,
            tracking_rounds: 1000,
        }
    }
}

fn claim1_method(
    method: Method,
    hyper: Hyper,
    rounds: usize,
    locals: &[Arc<LocalObjective>],
    global: &GlobalObjective,
    inst: &gtnsgdm_core::objective::Claim1Instance,
) -> Result<Claim1MethodReport, CliError> {
    let oracles = locals
        .iter()
        .enumerate()
        .map(|(i, l)| Oracle::new(l.clone(), NoiseSpec::None, None, RngStream::new(0, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut engine = RoundEngine::new(Arc::new(inst.mixing.clone()), oracles, method, hyper, &[inst.x0])?;
    let x0_bits = inst.x0.to_bits();
    let mut total = 0.0;
    let mut bit_constant = true;
    let mut first_below = None;
    for t in 0..rounds {
        let xs = engine.xs();
        let g = metrics::avg_grad_norm(&xs, global);
        total += g;
        bit_constant &= xs.iter().all(|x| x[0].to_bits() == x0_bits);
        if first_below.is_none() && g < 2.0 * hyper.alpha {
            first_below = Some(t);
        }
        engine.step()?;
    }
    let xs = engine.xs();
    bit_constant &= xs.iter().all(|x| x[0].to_bits() == x0_bits);
    if first_below.is_none() && metrics::avg_grad_norm(&xs, global) < 2.0 * hyper.alpha {
        first_below = Some(rounds);
    }
    Ok(Claim1MethodReport {
        method,
        alpha: hyper.alpha,
        rounds,
        time_avg_grad_norm: if rounds == 0 { f64::NAN } else { total / rounds as f64 },
        bit_constant,
        first_below_two_alpha: first_below,
    })
}

/// Runs VN-DSGD and GT-NSGDm on the counterexample and writes
/// `claim1.csv`. The caller decides what to do with [`Claim1Report::check`].
pub fn cmd_claim1(args: Claim1Args, out: &Path) -> Result<Claim1Report, CliError> {
    if args.rounds == 0 {
        return Err(CliError::invalid("rounds", "must be positive"));
    }
    let inst = claim1_instance(args.n, args.bound).map_err(|e| CliError::invalid("claim1", e.to_string()))?;
    let global = inst.global_objective()?;
    let locals = global.locals().to_vec();
    let vanilla = claim1_method(
        Method::VnDsgd,
        Hyper::default().with_alpha(args.vanilla_alpha),
        args.rounds,
        &locals,
        &global,
        &inst,
    )?;
    let tracking = claim1_method(
        Method::GtNsgdm,
        Hyper::default().with_alpha(args.tracking_alpha).with_beta(args.tracking_beta),
        args.tracking_rounds,
        &locals,
        &global,
        &inst,
    )?;
    let report = Claim1Report {
        n: args.n,
        bound: args.bound,
        vanilla,
        tracking,
    };
    write_file(out, "claim1.csv", &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `(T, α, β, mean time-averaged avg_grad_norm)` per surviving T.
    pub points: Vec<(usize, f64, f64, f64)>,
    pub fitted_slope: f64,
    pub theoretical_exponent: f64,
    pub rule: ScheduleRule,
    pub p: f64,
}

impl RateReport {
    pub fn summary(&self) -> String {
        let rule = match self.rule {
            ScheduleRule::Theorem1 => "theorem1: -(p-1)/(3p-2)",
            ScheduleRule::Theorem2 => "theorem2: -(p-1)/(2p)",
        };
        format!(
            "fitted slope = {:.4}, theoretical exponent = {:.4} ({rule}, p = {})",
            self.fitted_slope, self.theoretical_exponent, self.p
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rounds,alpha,beta,time_avg_grad_norm\n");
        for &(t, a, b, v) in &self.points {
            let _ = writeln!(out, "{t},{},{},{}", fmt_f64(a), fmt_f64(b), fmt_f64(v));
        }
        out
    }
}

/// Fresh scheduled runs for each horizon; fits the log-log slope of the
/// time-averaged gradient norm against `T` and writes `rate.csv`.
pub fn cmd_rate_check(cfg: &ExperimentConfig, horizons: &[usize], out: &Path) -> Result<RateReport, CliError> {
    let schedule = cfg
        .schedule
        .as_ref()
        .ok_or_else(|| CliError::invalid("schedule", "rate-check needs a theorem schedule"))?;
    if horizons.len() < 3 {
        return Err(CliError::invalid("rounds", "rate-check needs at least three horizons"));
    }
    let p = schedule.p.unwrap_or_else(|| cfg.noise.tail_index());
    let theoretical_exponent = match schedule.rule {
        ScheduleRule::Theorem1 => theorem1_exponent(p),
        ScheduleRule::Theorem2 => theorem2_exponent(p),
    };
    let inst = build_instance(cfg)?;
    let mut points = Vec::new();
    for &t in horizons {
        let (hyper, _) = resolve_hyper(cfg, &inst, t)?;
        let runs = run_seeds(cfg, &inst, t)?;
        let values: Vec<f64> = runs
            .iter()
            .filter(|r| !r.diverged)
            .map(|r| r.trace.time_averaged_grad_norm())
            .collect();
        if values.len() < runs.len() {
            warn!("T = {t}: {} diverged run(s) excluded", runs.len() - values.len());
        }
        if values.is_empty() {
            continue;
        }
        points.push((t, hyper.alpha, hyper.beta, gtnsgdm_core::vecops::mean(&values)));
    }
    let fit: Vec<(f64, f64)> = points.iter().map(|&(t, _, _, v)| (t as f64, v)).collect();
    let fitted_slope = fit_rate(&fit).map_err(|e| CliError::invalid("rate-check", e.to_string()))?;
    let report = RateReport {
        points,
        fitted_slope,
        theoretical_exponent,
        rule: schedule.rule,
        p,
    };
    write_file(out, "rate.csv", &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub draws: usize,
    pub tail_slope: f64,
    pub moment_p12: f64,
    pub moment_p2: f64,
    pub mean: f64,
}

impl NoiseReport {
    pub fn summary(&self) -> String {
        format!(
            "draws = {}, mean = {:.6}, tail slope (top 1%) = {:.4}, E|X|^1.2^(1/1.2) = {:.6}, E|X|^2^(1/2) = {:.6}",
            self.draws, self.mean, self.tail_slope, self.moment_p12, self.moment_p2
        )
    }
}

/// Draws scalars from the config's noise law, writes `noise_hist.csv` over
/// the central 98% and reports tail and moment diagnostics.
pub fn cmd_noise_diag(cfg: &ExperimentConfig, draws: usize, out: &Path) -> Result<NoiseReport, CliError> {
    if cfg.noise == NoiseSpec::None {
        return Err(CliError::invalid("noise", "noise-diag needs a noise family"));
    }
    if draws < 300 {
        return Err(CliError::invalid("draws", "need at least 300 draws"));
    }
    let values = cfg.noise.sample(&mut RngStream::new(cfg.seed, 0), draws)?;
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let lo = sorted[draws / 100];
    let hi = sorted[draws - 1 - draws / 100];
    let mut csv = String::from("bin_lo,bin_hi,count,density\n");
    let width = (hi - lo) / 50.0;
    for (a, b, count) in histogram(&values, lo, hi, 50) {
        let density = count as f64 / (draws as f64 * width);
        let _ = writeln!(csv, "{},{},{count},{}", fmt_f64(a), fmt_f64(b), fmt_f64(density));
    }
    write_file(out, "noise_hist.csv", &csv)?;
    let wrapped: Vec<[f64; 1]> = values.iter().map(|v| [*v]).collect();
    Ok(NoiseReport {
        draws,
        tail_slope: tail_slope(&values, 0.01)?,
        moment_p12: empirical_moment(&wrapped, 1.2)?,
        moment_p2: empirical_moment(&wrapped, 2.0)?,
        mean: gtnsgdm_core::vecops::mean(&values),
    })
}

/// One-line description of the config's mixing matrix.
pub fn cmd_topo_info(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let w = build_mixing(cfg)?;
    Ok(format!(
        "topology = {}, n = {}, weighting = {:?}, lambda = {:.10}",
        cfg.topology.kind.as_str(),
        w.n(),
        cfg.weighting(),
        w.lambda()
    ))
}
