use std::sync::Arc;

use rayon::prelude::*;

use super::clip::{clip_componentwise, clip_l2, smooth_clip};
use super::{Hyper, Method};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsTrace, RunSummary, TraceRow};
use crate::objective::{GlobalObjective, Oracle};
use crate::topology::MixingMatrix;
use crate::vecops::{all_finite, dist, mean_of, norm, safe_normalize};

/// Per-node optimizer state.
///
/// `v` is the local gradient estimator and `y` the tracker. Methods without
/// momentum keep their latest raw gradient in `v`; GT-Adam keeps its
/// surrogate-gradient tracker in `y`. `m` and `second` hold the remaining
/// buffers (first/second moment for GT-Adam, `m`/`m̂` for QG-DSGDm, `m` for
/// SClip-EF).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub m: Vec<f64>,
    pub second: Vec<f64>,
}

impl NodeState {
    fn new(x0: &[f64]) -> Self {
        let zeros = vec![0.0; x0.len()];
        Self {
            x: x0.to_vec(),
            v: zeros.clone(),
            y: zeros.clone(),
            m: zeros.clone(),
            second: zeros,
        }
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.x) && all_finite(&self.v) && all_finite(&self.y) && all_finite(&self.m) && all_finite(&self.second)
    }
}

/// Diagnostics of one synchronous round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Round index that was just executed.
    pub t: usize,
    /// `‖x̄^{t+1} − x̄^t‖`.
    pub step_len: f64,
    /// `‖ȳ^t − v̄^t‖` for tracking methods, else 0.
    pub tracking_gap: f64,
    /// `‖v̄^t‖`.
    pub mean_v_norm: f64,
    pub finite: bool,
}

impl StepReport {
    pub fn tracking_gap_rel(&self) -> f64 {
        self.tracking_gap / (1.0 + self.mean_v_norm)
    }
}

/// Lockstep simulation of `n` nodes exchanging over a fixed mixing matrix.
#[derive(Debug, Clone)]
pub struct RoundEngine {
    mixing: Arc<MixingMatrix>,
    states: Vec<NodeState>,
    oracles: Vec<Oracle>,
    method: Method,
    hyper: Hyper,
    t: usize,
}

impl RoundEngine {
    /// All nodes start from the common point `x0` with zero buffers.
    pub fn new(mixing: Arc<MixingMatrix>, oracles: Vec<Oracle>, method: Method, hyper: Hyper, x0: &[f64]) -> Result<Self> {
        if oracles.len() != mixing.n() {
            return Err(Error::InvalidSize(format!(
                "{} oracles for a {}-node mixing matrix",
                oracles.len(),
                mixing.n()
            )));
        }
        if let Some(o) = oracles.iter().find(|o| o.objective().dim() != x0.len()) {
            return Err(Error::InvalidDimension(format!(
                "objective dimension {} does not match x0 dimension {}",
                o.objective().dim(),
                x0.len()
            )));
        }
        hyper.validate(method)?;
        let states = vec![NodeState::new(x0); mixing.n()];
        Ok(Self {
            mixing,
            states,
            oracles,
            method,
            hyper,
            t: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].x.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.mixing
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    pub fn xs(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }

    pub fn x_bar(&self) -> Vec<f64> {
        mean_of(self.states.iter().map(|s| s.x.as_slice()), self.dim())
    }

    pub fn y_bar(&self) -> Vec<f64> {
        mean_of(self.states.iter().map(|s| s.y.as_slice()), self.dim())
    }

    pub fn v_bar(&self) -> Vec<f64> {
        mean_of(self.states.iter().map(|s| s.v.as_slice()), self.dim())
    }

    fn sample_gradients(&mut self) -> Result<Vec<Vec<f64>>> {
        self.states
            .par_iter()
            .zip(self.oracles.par_iter_mut())
            .map(|(s, o)| o.stochastic_gradient(&s.x))
            .collect()
    }

    fn exact_gradients(&self) -> Vec<Vec<f64>> {
        self.states
            .par_iter()
            .zip(self.oracles.par_iter())
            .map(|(s, o)| o.objective().gradient(&s.x))
            .collect()
    }

    fn mix(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.mixing.mix(inputs)
    }

    fn set_x(&mut self, xs: Vec<Vec<f64>>) {
        for (s, x) in self.states.iter_mut().zip(xs) {
            s.x = x;
        }
    }

    /// Execute one synchronous round of the configured method.
    pub fn step(&mut self) -> Result<StepReport> {
        let before = self.x_bar();
        match self.method {
            Method::GtNsgdm => self.gt_nsgdm_step()?,
            Method::Dsgd => self.dsgd_step()?,
            Method::GtDsgd => self.gt_dsgd_step()?,
            Method::DsgdClip | Method::DsgdGclip | Method::DsgdCclip => self.dsgd_clip_step()?,
            Method::SclipEf => self.sclip_ef_step()?,
            Method::GtAdam => self.gt_adam_step()?,
            Method::QgDsgdm => self.qg_dsgdm_step()?,
            Method::VnDsgd => self.vanilla_normalized_dsgd_step(),
        }
        let t = self.t;
        self.t += 1;
        let after = self.x_bar();
        let v_bar = self.v_bar();
        let tracking_gap = if self.method.is_tracking() {
            dist(&self.y_bar(), &v_bar)
        } else {
            0.0
        };
        Ok(StepReport {
            t,
            step_len: dist(&after, &before),
            tracking_gap,
            mean_v_norm: norm(&v_bar),
            finite: self.states.iter().all(NodeState::is_finite),
        })
    }

    /// `v ← βv + (1−β)g`, `y ← W(y + v − v_prev)`, `x ← W(x − α y/‖y‖)`.
    fn gt_nsgdm_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let Hyper { alpha, beta, .. } = self.hyper;
        let mut corrected = Vec::with_capacity(self.n());
        for (s, g) in self.states.iter_mut().zip(&grads) {
            let v_new: Vec<f64> = s.v.iter().zip(g).map(|(v, g)| beta * v + (1.0 - beta) * g).collect();
            corrected.push(
                s.y.iter()
                    .zip(&v_new)
                    .zip(&s.v)
                    .map(|((y, vn), vo)| y + vn - vo)
                    .collect::<Vec<f64>>(),
            );
            s.v = v_new;
        }
        let ys = self.mix(&corrected);
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .zip(&ys)
            .map(|(s, y)| {
                let dir = safe_normalize(y);
                s.x.iter().zip(dir).map(|(x, u)| x - alpha * u).collect()
            })
            .collect();
        let xs = self.mix(&moved);
        for (s, y) in self.states.iter_mut().zip(ys) {
            s.y = y;
        }
        self.set_x(xs);
        Ok(())
    }

    /// `x ← W(x − α g)`.
    fn dsgd_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let alpha = self.hyper.alpha;
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .zip(&grads)
            .map(|(s, g)| s.x.iter().zip(g).map(|(x, g)| x - alpha * g).collect())
            .collect();
        let xs = self.mix(&moved);
        for (s, g) in self.states.iter_mut().zip(grads) {
            s.v = g;
        }
        self.set_x(xs);
        Ok(())
    }

    /// `y ← W(y + g^t − g^{t−1})`, `x ← W(x − α y)`; `v` stores `g^t`.
    fn gt_dsgd_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let alpha = self.hyper.alpha;
        let corrected: Vec<Vec<f64>> = self
            .states
            .iter()
            .zip(&grads)
            .map(|(s, g)| s.y.iter().zip(g).zip(&s.v).map(|((y, g), gp)| y + g - gp).collect())
            .collect();
        let ys = self.mix(&corrected);
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .zip(&ys)
            .map(|(s, y)| s.x.iter().zip(y).map(|(x, y)| x - alpha * y).collect())
            .collect();
        let xs = self.mix(&moved);
        for ((s, y), g) in self.states.iter_mut().zip(ys).zip(grads) {
            s.y = y;
            s.v = g;
        }
        self.set_x(xs);
        Ok(())
    }

    /// `x_i ← Σ_r w_ir x_r − α_t clip(g_i)`; the clipped term stays outside
    /// the mixing sum.
    fn dsgd_clip_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let Hyper { alpha, tau, .. } = self.hyper;
        let k = (self.t + 1) as f64;
        let clipped: Vec<Vec<f64>> = grads
            .iter()
            .map(|g| match self.method {
                Method::DsgdClip => clip_l2(g, tau * k.powf(0.4)),
                Method::DsgdGclip => clip_l2(g, tau),
                _ => clip_componentwise(g, tau),
            })
            .collect();
        let step = if self.method == Method::DsgdClip { alpha / k } else { alpha };
        let mixed = self.mix(&self.xs());
        let xs = mixed
            .into_iter()
            .zip(&clipped)
            .map(|(x, c)| x.iter().zip(c).map(|(x, c)| x - step * c).collect())
            .collect();
        for (s, g) in self.states.iter_mut().zip(grads) {
            s.v = g;
        }
        self.set_x(xs);
        Ok(())
    }

    /// `m ← β_t m + (1−β_t) Ψ_t(g − m)`, `x ← W(x − α_t m)`.
    fn sclip_ef_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let Hyper {
            alpha, beta, tau, c_phi, ..
        } = self.hyper;
        let t = self.t;
        let k = (t + 1) as f64;
        let beta_t = beta / k.sqrt();
        let alpha_t = alpha / k.powf(0.2);
        for (s, g) in self.states.iter_mut().zip(&grads) {
            s.m = s
                .m
                .iter()
                .zip(g)
                .map(|(m, g)| beta_t * m + (1.0 - beta_t) * smooth_clip(g - m, t, c_phi, tau))
                .collect();
        }
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .map(|s| s.x.iter().zip(&s.m).map(|(x, m)| x - alpha_t * m).collect())
            .collect();
        let xs = self.mix(&moved);
        for (s, g) in self.states.iter_mut().zip(grads) {
            s.v = g;
        }
        self.set_x(xs);
        Ok(())
    }

    /// Adam moments on the tracked surrogate `s` (kept in `y`), mixed `x`
    /// update, then `s ← W s + g^{t+1} − g^t` with the gradient at the new
    /// point. The first call seeds `s⁰ = g⁰ = g(x⁰)`.
    fn gt_adam_step(&mut self) -> Result<()> {
        if self.t == 0 {
            let g0 = self.sample_gradients()?;
            for (s, g) in self.states.iter_mut().zip(g0) {
                s.y = g.clone();
                s.v = g;
            }
        }
        let Hyper {
            alpha,
            beta1,
            beta2,
            g_cap,
            eps,
            ..
        } = self.hyper;
        let mut directions = Vec::with_capacity(self.n());
        for s in self.states.iter_mut() {
            s.m = s.m.iter().zip(&s.y).map(|(m, g)| beta1 * m + (1.0 - beta1) * g).collect();
            s.second = s
                .second
                .iter()
                .zip(&s.y)
                .map(|(v, g)| (beta2 * v + (1.0 - beta2) * g * g).min(g_cap))
                .collect();
            directions.push(
                s.m.iter()
                    .zip(&s.second)
                    .map(|(m, v)| m / (v + eps).sqrt())
                    .collect::<Vec<f64>>(),
            );
        }
        let mixed = self.mix(&self.xs());
        let xs = mixed
            .into_iter()
            .zip(&directions)
            .map(|(x, d)| x.iter().zip(d).map(|(x, d)| x - alpha * d).collect())
            .collect();
        self.set_x(xs);
        let grads = self.sample_gradients()?;
        let ys: Vec<Vec<f64>> = self.states.iter().map(|s| s.y.clone()).collect();
        let mixed_s = self.mix(&ys);
        for ((s, ms), g) in self.states.iter_mut().zip(mixed_s).zip(grads) {
            s.y = ms.iter().zip(&g).zip(&s.v).map(|((ms, g), gp)| ms + g - gp).collect();
            s.v = g;
        }
        Ok(())
    }

    /// `m ← β m̂ + g`, `x⁺ = W(x − η m)`, `m̂ ← μ m̂ + (1−μ)(x⁺ − x)/η`.
    fn qg_dsgdm_step(&mut self) -> Result<()> {
        let grads = self.sample_gradients()?;
        let Hyper { alpha: eta, beta, mu, .. } = self.hyper;
        for (s, g) in self.states.iter_mut().zip(&grads) {
            s.m = s.second.iter().zip(g).map(|(mh, g)| beta * mh + g).collect();
        }
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .map(|s| s.x.iter().zip(&s.m).map(|(x, m)| x - eta * m).collect())
            .collect();
        let xs = self.mix(&moved);
        for ((s, x_new), g) in self.states.iter_mut().zip(xs).zip(grads) {
            s.second = s
                .second
                .iter()
                .zip(&x_new)
                .zip(&s.x)
                .map(|((mh, xn), xo)| mu * mh + (1.0 - mu) * (xn - xo) / eta)
                .collect();
            s.x = x_new;
            s.v = g;
        }
        Ok(())
    }

    /// `x ← W(x − α ∇f/‖∇f‖)` with exact local gradients.
    fn vanilla_normalized_dsgd_step(&mut self) {
        let grads = self.exact_gradients();
        let alpha = self.hyper.alpha;
        let moved: Vec<Vec<f64>> = self
            .states
            .iter()
            .zip(&grads)
            .map(|(s, g)| {
                let dir = safe_normalize(g);
                s.x.iter().zip(dir).map(|(x, u)| x - alpha * u).collect()
            })
            .collect();
        let xs = self.mix(&moved);
        for (s, g) in self.states.iter_mut().zip(grads) {
            s.v = g;
        }
        self.set_x(xs);
    }
}

fn probe_row(engine: &RoundEngine, global: &GlobalObjective, report: Option<&StepReport>) -> TraceRow {
    let xs = engine.xs();
    let tracking = engine.method().is_tracking();
    let consensus_y = if tracking && report.is_some() {
        let ys: Vec<Vec<f64>> = engine.states().iter().map(|s| s.y.clone()).collect();
        metrics::consensus_error(&ys)
    } else {
        0.0
    };
    TraceRow {
        t: engine.t(),
        avg_grad_norm: metrics::avg_grad_norm(&xs, global),
        estimation_error: metrics::estimation_error(&xs, global.reference()).unwrap_or(f64::NAN),
        consensus_x: metrics::consensus_error(&xs),
        consensus_y,
        tracking_gap: report.map_or(0.0, |r| r.tracking_gap),
        step_len: report.map_or(0.0, |r| r.step_len),
        diverged: report.is_some_and(|r| !r.finite),
    }
}

/// [`run_with_hook`] without a per-round hook.
pub fn run(engine: &mut RoundEngine, rounds: usize, probe_every: usize, global: &GlobalObjective) -> Result<MetricsTrace> {
    run_with_hook(engine, rounds, probe_every, global, |_, _| {})
}

/// Execute `rounds` synchronous rounds, probing the metrics at `t = 0`,
/// every `probe_every` rounds and after the last round. `hook` sees the
/// engine after every round.
///
/// A non-finite state stops the run with [`Error::Diverged`], whose trace
/// ends with the flagged row.
pub fn run_with_hook<F>(
    engine: &mut RoundEngine,
    rounds: usize,
    probe_every: usize,
    global: &GlobalObjective,
    mut hook: F,
) -> Result<MetricsTrace>
where
    F: FnMut(&RoundEngine, &StepReport),
{
    if probe_every == 0 {
        return Err(Error::param("probe_every", "must be positive"));
    }
    if global.dim() != engine.dim() {
        return Err(Error::InvalidDimension("global objective and engine disagree".into()));
    }
    let mut trace = MetricsTrace::default();
    trace.rows.push(probe_row(engine, global, None));
    let mut summary = RunSummary::default();
    for done in 1..=rounds {
        let report = engine.step()?;
        hook(engine, &report);
        summary.rounds = done;
        summary.max_step_len = summary.max_step_len.max(report.step_len);
        if engine.method().is_tracking() {
            summary.max_tracking_gap_rel = summary.max_tracking_gap_rel.max(report.tracking_gap_rel());
        }
        if !report.finite {
            summary.diverged_at = Some(done);
            trace.rows.push(probe_row(engine, global, Some(&report)));
            trace.summary = summary;
            return Err(Error::Diverged {
                round: done,
                trace: Box::new(trace),
            });
        }
        if done % probe_every == 0 || done == rounds {
            trace.rows.push(probe_row(engine, global, Some(&report)));
        }
    }
    trace.summary = summary;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseSpec, RngStream};
    use crate::objective::{claim1_instance, LocalObjective};

    fn quad_engine(centers: &[f64], mixing: MixingMatrix, method: Method, hyper: Hyper, x0: f64) -> (RoundEngine, GlobalObjective) {
        let locals: Vec<Arc<LocalObjective>> = centers.iter().map(|&a| Arc::new(LocalObjective::quadratic_scalar(a))).collect();
        let oracles = locals
            .iter()
            .enumerate()
            .map(|(i, l)| Oracle::new(l.clone(), NoiseSpec::None, None, RngStream::new(0, i as u64)).unwrap())
            .collect();
        let m = centers.iter().sum::<f64>() / centers.len() as f64;
        let global = GlobalObjective::new(locals, vec![m], 0.0).unwrap();
        (RoundEngine::new(Arc::new(mixing), oracles, method, hyper, &[x0]).unwrap(), global)
    }

    #[test]
    fn single_node_normalized_step() {
        let (mut e, _) = quad_engine(&[0.0], MixingMatrix::averaging(1).unwrap(), Method::GtNsgdm, Hyper::default().with_alpha(0.5), 2.0);
        e.step().unwrap();
        assert_eq!(e.states()[0].x, vec![1.5]);
    }

    #[test]
    fn symmetric_start_zero_tracker() {
        // v = (1, −1) cancels in the tracker mix, so the safe-normalize path
        // leaves the average where it was.
        let (mut e, _) = quad_engine(&[0.0, 2.0], MixingMatrix::averaging(2).unwrap(), Method::GtNsgdm, Hyper::default().with_alpha(0.1), 1.0);
        let before = e.x_bar();
        let report = e.step().unwrap();
        assert_eq!(e.states()[0].v, vec![1.0]);
        assert_eq!(e.states()[1].v, vec![-1.0]);
        assert_eq!(e.states()[0].y, vec![0.0]);
        assert_eq!(e.states()[1].y, vec![0.0]);
        assert_eq!(e.x_bar(), before);
        assert_eq!(report.step_len, 0.0);
        assert!(report.finite);
    }

    #[test]
    fn dsgd_single_node_is_gradient_descent() {
        let (mut e, _) = quad_engine(&[1.0], MixingMatrix::averaging(1).unwrap(), Method::Dsgd, Hyper::default().with_alpha(0.25), 3.0);
        e.step().unwrap();
        assert_eq!(e.states()[0].x, vec![3.0 - 0.25 * 2.0]);
    }

    #[test]
    fn qg_without_momentum_equals_dsgd() {
        let ring = crate::topology::metropolis_weights(&crate::topology::build_graph(crate::topology::TopologyKind::Ring, 4).unwrap()).unwrap();
        let centers = [0.0, 1.0, -2.0, 5.0];
        let hyper = Hyper {
            alpha: 0.05,
            beta: 0.0,
            mu: 0.0,
            ..Hyper::default()
        };
        let (mut qg, _) = quad_engine(&centers, ring.clone(), Method::QgDsgdm, hyper, 0.7);
        let (mut dsgd, _) = quad_engine(&centers, ring, Method::Dsgd, hyper, 0.7);
        for _ in 0..50 {
            qg.step().unwrap();
            dsgd.step().unwrap();
        }
        for (a, b) in qg.xs().iter().zip(dsgd.xs()) {
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn gt_adam_momentum_free_is_sign_like() {
        let hyper = Hyper {
            alpha: 0.1,
            beta1: 0.0,
            beta2: 0.0,
            eps: 1e-300,
            ..Hyper::default()
        };
        let (mut e, _) = quad_engine(&[0.0], MixingMatrix::averaging(1).unwrap(), Method::GtAdam, hyper, 5.0);
        e.step().unwrap();
        assert!((e.states()[0].x[0] - 4.9).abs() < 1e-12);
    }

    #[test]
    fn vn_dsgd_freezes_on_claim1() {
        let inst = claim1_instance(2, 1.0).unwrap();
        let centers: Vec<f64> = inst.objectives.iter().map(|o| match o {
            LocalObjective::Quadratic { center } => center[0],
            _ => unreachable!(),
        }).collect();
        let (mut e, _) = quad_engine(&centers, inst.mixing.clone(), Method::VnDsgd, Hyper::default().with_alpha(0.3), inst.x0);
        for _ in 0..100 {
            e.step().unwrap();
            assert!(e.states().iter().all(|s| s.x[0] == inst.x0));
        }
    }

    #[test]
    fn run_with_zero_rounds_has_initial_probe() {
        let (mut e, g) = quad_engine(&[0.0], MixingMatrix::averaging(1).unwrap(), Method::Dsgd, Hyper::default(), 3.0);
        let trace = run(&mut e, 0, 10, &g).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].t, 0);
        assert_eq!(trace.rows[0].avg_grad_norm, 3.0);
    }

    #[test]
    fn run_probe_cadence() {
        let (mut e, g) = quad_engine(&[0.0], MixingMatrix::averaging(1).unwrap(), Method::Dsgd, Hyper::default(), 3.0);
        let trace = run(&mut e, 25, 10, &g).unwrap();
        let ts: Vec<usize> = trace.rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 10, 20, 25]);
        assert_eq!(trace.summary.rounds, 25);
    }

    #[test]
    fn divergence_is_flagged() {
        // α = 3 on ½x² overshoots with factor −2 every round until overflow.
        let (mut e, g) = quad_engine(&[0.0], MixingMatrix::averaging(1).unwrap(), Method::Dsgd, Hyper::default().with_alpha(3.0), 1.0);
        match run(&mut e, 5000, 100, &g) {
            Err(Error::Diverged { round, trace }) => {
                assert!(round > 1000);
                assert!(trace.last().unwrap().diverged);
                assert_eq!(trace.summary.diverged_at, Some(round));
                assert!(trace.rows[..trace.rows.len() - 1].iter().all(|r| r.is_finite()));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let locals = [Arc::new(LocalObjective::quadratic_scalar(0.0))];
        let oracles = vec![Oracle::new(locals[0].clone(), NoiseSpec::None, None, RngStream::new(0, 0)).unwrap()];
        let w = Arc::new(MixingMatrix::averaging(2).unwrap());
        assert!(RoundEngine::new(w, oracles.clone(), Method::Dsgd, Hyper::default(), &[0.0]).is_err());
        let w = Arc::new(MixingMatrix::averaging(1).unwrap());
        assert!(RoundEngine::new(w, oracles, Method::Dsgd, Hyper::default(), &[0.0, 1.0]).is_err());
    }
}
