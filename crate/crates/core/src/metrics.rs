//! Evaluation quantities, run traces and rate fitting.

use std::fmt::Write as _;

use crate::error::{Error, Result};
pub use crate::objective::fmt_f64;
use crate::objective::{parse_row, GlobalObjective};
use crate::vecops::{dist, mean, mean_of};

/// Column order of the trace CSV.
pub const TRACE_HEADER: &str = "t,avg_grad_norm,estimation_error,consensus_x,consensus_y,tracking_gap,step_len,diverged";

/// `(1/n) Σ_i ‖∇f(x_i)‖` with the exact (noise-free) global gradient.
pub fn avg_grad_norm(xs: &[Vec<f64>], global: &GlobalObjective) -> f64 {
    let norms: Vec<f64> = xs
        .iter()
        .map(|x| crate::vecops::norm(&global.gradient(x)))
        .collect();
    mean(&norms)
}

/// `(1/n) Σ_i ‖w_i − w*‖`.
pub fn estimation_error(ws: &[Vec<f64>], w_star: &[f64]) -> Result<f64> {
    if let Some(bad) = ws.iter().find(|w| w.len() != w_star.len()) {
        return Err(Error::InvalidInput(format!(
            "state has dimension {} but reference has {}",
            bad.len(),
            w_star.len()
        )));
    }
    let d: Vec<f64> = ws.iter().map(|w| dist(w, w_star)).collect();
    Ok(mean(&d))
}

/// `(1/n) Σ_i ‖z_i − z̄‖`.
pub fn consensus_error(zs: &[Vec<f64>]) -> f64 {
    if zs.is_empty() {
        return 0.0;
    }
    let dim = zs[0].len();
    let avg = mean_of(zs.iter().map(Vec::as_slice), dim);
    let d: Vec<f64> = zs.iter().map(|z| dist(z, &avg)).collect();
    mean(&d)
}

/// Least-squares slope of `log value` against `log T`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("rate fit needs >= 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0) || !(p.1 > 0.0)) {
        return Err(Error::InvalidInput(format!("rate fit needs positive T and values, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    Ok(crate::noise::least_squares_slope(&logs))
}

/// One probe of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub avg_grad_norm: f64,
    pub estimation_error: f64,
    pub consensus_x: f64,
    pub consensus_y: f64,
    pub tracking_gap: f64,
    pub step_len: f64,
    pub diverged: bool,
}

impl TraceRow {
    fn values(&self) -> [f64; 6] {
        [
            self.avg_grad_norm,
            self.estimation_error,
            self.consensus_x,
            self.consensus_y,
            self.tracking_gap,
            self.step_len,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Whole-run statistics collected every round, independent of probe cadence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSummary {
    pub rounds: usize,
    pub max_step_len: f64,
    /// `max_t ‖ȳ^t − v̄^t‖ / (1 + ‖v̄^t‖)`; zero for methods without a tracker.
    pub max_tracking_gap_rel: f64,
    pub diverged_at: Option<usize>,
}

/// Probe rows of one run.
///
/// Row `t` holds the `x`-metrics at `x^t`, the tracker metrics of the
/// round that produced `x^t` and `step_len = ‖x̄^t − x̄^{t−1}‖` (all zero at
/// `t = 0`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTrace {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

impl MetricsTrace {
    pub fn diverged(&self) -> bool {
        self.summary.diverged_at.is_some()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn first(&self) -> Option<&TraceRow> {
        self.rows.first()
    }

    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.estimation_error)
    }

    /// Mean of `avg_grad_norm` over all probe rows before the final state.
    pub fn time_averaged_grad_norm(&self) -> f64 {
        let rows: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.t < self.summary.rounds || self.summary.rounds == 0)
            .map(|r| r.avg_grad_norm)
            .collect();
        mean(&rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{}", r.t);
            for v in r.values() {
                let _ = write!(out, ",{}", fmt_f64(v));
            }
            let _ = writeln!(out, ",{}", u8::from(r.diverged));
        }
        out
    }

    /// Parse rows written by [`MetricsTrace::to_csv`]. The summary is
    /// reconstructed from the rows only.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    reason: format!("expected header `{TRACE_HEADER}`"),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_row(line, idx + 2)?;
            if v.len() != 8 {
                return Err(Error::Parse {
                    line: idx + 2,
                    reason: format!("expected 8 fields, got {}", v.len()),
                });
            }
            rows.push(TraceRow {
                t: v[0] as usize,
                avg_grad_norm: v[1],
                estimation_error: v[2],
                consensus_x: v[3],
                consensus_y: v[4],
                tracking_gap: v[5],
                step_len: v[6],
                diverged: v[7] != 0.0,
            });
        }
        let diverged_at = rows.iter().find(|r| r.diverged).map(|r| r.t);
        let summary = RunSummary {
            rounds: rows.last().map_or(0, |r| r.t),
            max_step_len: rows.iter().map(|r| r.step_len).fold(0.0, f64::max),
            max_tracking_gap_rel: f64::NAN,
            diverged_at,
        };
        Ok(Self { rows, summary })
    }
}

/// Mean and sample standard deviation of a set of values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    if values.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (m, (ss / (values.len() - 1) as f64).sqrt())
}

/// Per-probe mean ± std across independent seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub runs: usize,
    pub mean: [f64; 6],
    pub std: [f64; 6],
    pub diverged: usize,
}

impl AggregateRow {
    pub fn estimation_error_mean(&self) -> f64 {
        self.mean[1]
    }

    pub fn avg_grad_norm_mean(&self) -> f64 {
        self.mean[0]
    }
}

/// Aggregate traces by probe index `t`. Rows missing from a diverged run
/// are left out of that probe's statistics.
pub fn aggregate(traces: &[MetricsTrace]) -> Vec<AggregateRow> {
    let mut ts: Vec<usize> = traces.iter().flat_map(|tr| tr.rows.iter().map(|r| r.t)).collect();
    ts.sort_unstable();
    ts.dedup();
    ts.into_iter()
        .map(|t| {
            let rows: Vec<&TraceRow> = traces
                .iter()
                .filter_map(|tr| tr.rows.iter().find(|r| r.t == t))
                .collect();
            let mut mean_v = [0.0; 6];
            let mut std_v = [0.0; 6];
            for k in 0..6 {
                let col: Vec<f64> = rows.iter().map(|r| r.values()[k]).collect();
                let (m, s) = mean_std(&col);
                mean_v[k] = m;
                std_v[k] = s;
            }
            AggregateRow {
                t,
                runs: rows.len(),
                mean: mean_v,
                std: std_v,
                diverged: rows.iter().filter(|r| r.diverged).count(),
            }
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str = "t,runs,avg_grad_norm_mean,avg_grad_norm_std,estimation_error_mean,estimation_error_std,consensus_x_mean,consensus_x_std,consensus_y_mean,consensus_y_std,tracking_gap_mean,tracking_gap_std,step_len_mean,step_len_std,diverged";

pub fn aggregate_to_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.t, r.runs);
        for k in 0..6 {
            let _ = write!(out, ",{},{}", fmt_f64(r.mean[k]), fmt_f64(r.std[k]));
        }
        let _ = writeln!(out, ",{}", r.diverged);
    }
    out
}
