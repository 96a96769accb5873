//! Local objectives, the synthetic tokenized regression dataset and the
//! per-node stochastic first-order oracle.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, RngStream};
use crate::topology::MixingMatrix;
use crate::vecops::{dot, mean_of, pairwise_sum};

/// Threshold of the Tukey biweight loss commonly used in robust statistics.
pub const TUKEY_C: f64 = 4.6851;

/// Stream index reserved for dataset generation.
pub const DATASET_STREAM: u64 = u64::MAX;

/// Bernoulli rates of the token features: two frequent, two medium, the rest rare.
fn token_rate(column: usize) -> f64 {
    match column {
        0 | 1 => 0.9,
        2 | 3 => 0.5,
        _ => 0.1,
    }
}

/// Binary features `x` (row-major), labels `y = x·w_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    w_star: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>, w_star: Vec<f64>) -> Result<Self> {
        if dim == 0 || x.len() != y.len() * dim || w_star.len() != dim {
            return Err(Error::InvalidDimension(format!(
                "{} features, {} labels, {} weights for dim {dim}",
                x.len(),
                y.len(),
                w_star.len()
            )));
        }
        Ok(Self { dim, x, y, w_star })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    /// CSV with header `x1..xd,y`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        let _ = writeln!(out, "{},y", header.join(","));
        for k in 0..self.len() {
            for v in self.row(k) {
                let _ = write!(out, "{},", fmt_f64(*v));
            }
            let _ = writeln!(out, "{}", fmt_f64(self.y[k]));
        }
        out
    }

    /// Sidecar CSV holding `w_star`, one coordinate per line.
    pub fn w_star_csv(&self) -> String {
        let mut out = String::from("w_star\n");
        for v in &self.w_star {
            let _ = writeln!(out, "{}", fmt_f64(*v));
        }
        out
    }

    pub fn from_csv(data: &str, w_star: &str) -> Result<Self> {
        let mut lines = data.lines();
        let header = lines.next().ok_or(Error::EmptyInput("dataset csv"))?;
        let dim = header.split(',').count().checked_sub(1).filter(|d| *d > 0).ok_or(Error::Parse {
            line: 1,
            reason: "header needs at least one feature and a label".into(),
        })?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let values = parse_row(line, idx + 2)?;
            if values.len() != dim + 1 {
                return Err(Error::Parse {
                    line: idx + 2,
                    reason: format!("expected {} fields, got {}", dim + 1, values.len()),
                });
            }
            x.extend_from_slice(&values[..dim]);
            y.push(values[dim]);
        }
        let mut w = Vec::new();
        for (idx, line) in w_star.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            w.extend(parse_row(line, idx + 1)?);
        }
        Dataset::new(dim, x, y, w)
    }
}

/// Seventeen significant digits, enough to parse back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("`{tok}` is not a number"),
            })
        })
        .collect()
}

/// Tokenized synthetic regression data.
pub fn generate_token_dataset(n_samples: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if dim < 4 {
        return Err(Error::InvalidDimension(format!("token features need d >= 4, got {dim}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidSize("dataset needs at least one sample".into()));
    }
    let mut stream = RngStream::new(seed, DATASET_STREAM);
    let w_star: Vec<f64> = (0..dim).map(|_| stream.standard_normal()).collect();
    let mut x = Vec::with_capacity(n_samples * dim);
    for _ in 0..n_samples {
        for col in 0..dim {
            x.push(if stream.bernoulli(token_rate(col)) { 1.0 } else { 0.0 });
        }
    }
    let y = x.chunks_exact(dim).map(|row| dot(row, &w_star)).collect();
    Dataset::new(dim, x, y, w_star)
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("Tukey threshold must be > 0, got {c}")));
    }
    Ok(())
}

/// Tukey biweight loss: `(c²/6)(1 − (1 − (r/c)²)³)` inside `|r| <= c`, `c²/6` outside.
pub fn tukey_loss(r: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(tukey_loss_unchecked(r, c))
}

/// Derivative of [`tukey_loss`]: `r(1 − (r/c)²)²` inside, 0 outside.
pub fn tukey_grad(r: f64, c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(tukey_grad_unchecked(r, c))
}

#[inline]
fn tukey_loss_unchecked(r: f64, c: f64) -> f64 {
    let cap = c * c / 6.0;
    if r.abs() <= c {
        let u = 1.0 - (r / c) * (r / c);
        cap * (1.0 - u * u * u)
    } else {
        cap
    }
}

#[inline]
fn tukey_grad_unchecked(r: f64, c: f64) -> f64 {
    if r.abs() <= c {
        let u = 1.0 - (r / c) * (r / c);
        r * u * u
    } else {
        0.0
    }
}

/// One node's share of a linear regression under the Tukey loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyShard {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    c: f64,
}

impl TukeyShard {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>, c: f64) -> Result<Self> {
        check_c(c)?;
        if dim == 0 || x.len() != y.len() * dim {
            return Err(Error::InvalidDimension(format!("{} features for {} labels at d = {dim}", x.len(), y.len())));
        }
        Ok(Self { dim, x, y, c })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalObjective {
    /// Tukey regression over a contiguous data shard.
    Tukey(TukeyShard),
    /// `½‖x − center‖²`.
    Quadratic { center: Vec<f64> },
}

impl LocalObjective {
    pub fn quadratic_scalar(center: f64) -> Self {
        LocalObjective::Quadratic { center: vec![center] }
    }

    pub fn dim(&self) -> usize {
        match self {
            LocalObjective::Tukey(s) => s.dim,
            LocalObjective::Quadratic { center } => center.len(),
        }
    }

    /// Number of samples available for minibatching (1 for quadratics).
    pub fn sample_count(&self) -> usize {
        match self {
            LocalObjective::Tukey(s) => s.len(),
            LocalObjective::Quadratic { .. } => 1,
        }
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        match self {
            LocalObjective::Tukey(s) => {
                let losses: Vec<f64> = (0..s.len())
                    .map(|k| tukey_loss_unchecked(s.y[k] - dot(s.row(k), w), s.c))
                    .collect();
                crate::vecops::mean(&losses)
            }
            LocalObjective::Quadratic { center } => {
                0.5 * center.iter().zip(w).map(|(a, x)| (x - a) * (x - a)).sum::<f64>()
            }
        }
    }

    /// Exact gradient over the whole shard.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        match self {
            LocalObjective::Tukey(s) => {
                let mut grad = vec![0.0; s.dim];
                for k in 0..s.len() {
                    let row = s.row(k);
                    let weight = tukey_grad_unchecked(s.y[k] - dot(row, w), s.c);
                    if weight != 0.0 {
                        for (g, xk) in grad.iter_mut().zip(row) {
                            *g -= weight * xk;
                        }
                    }
                }
                let m = s.len() as f64;
                grad.iter_mut().for_each(|g| *g /= m);
                grad
            }
            LocalObjective::Quadratic { center } => w.iter().zip(center).map(|(x, a)| x - a).collect(),
        }
    }

    /// Gradient averaged over the listed samples (repeats allowed).
    pub fn local_gradient(&self, w: &[f64], indices: &[usize]) -> Result<Vec<f64>> {
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let count = self.sample_count();
        if let Some(bad) = indices.iter().find(|&&k| k >= count) {
            return Err(Error::InvalidInput(format!("sample index {bad} outside shard of {count}")));
        }
        match self {
            LocalObjective::Tukey(s) => {
                let mut grad = vec![0.0; s.dim];
                for &k in indices {
                    let row = s.row(k);
                    let weight = tukey_grad_unchecked(s.y[k] - dot(row, w), s.c);
                    for (g, xk) in grad.iter_mut().zip(row) {
                        *g -= weight * xk;
                    }
                }
                let m = indices.len() as f64;
                grad.iter_mut().for_each(|g| *g /= m);
                Ok(grad)
            }
            LocalObjective::Quadratic { .. } => Ok(self.gradient(w)),
        }
    }

    /// Upper bound on the gradient's Lipschitz constant.
    ///
    /// For Tukey shards `|ℓ''| <= 1`, so `λ_max(XᵀX/m)` bounds it.
    pub fn smoothness_bound(&self) -> f64 {
        match self {
            LocalObjective::Tukey(s) => {
                let m = s.len() as f64;
                let mut v = vec![1.0; s.dim];
                let mut estimate = 0.0;
                for _ in 0..500 {
                    let mut next = vec![0.0; s.dim];
                    for k in 0..s.len() {
                        let row = s.row(k);
                        let proj = dot(row, &v) / m;
                        for (n, xk) in next.iter_mut().zip(row) {
                            *n += proj * xk;
                        }
                    }
                    let nn = crate::vecops::norm(&next);
                    if nn == 0.0 {
                        return 0.0;
                    }
                    let converged = (nn - estimate).abs() <= 1e-12 * nn;
                    estimate = nn;
                    v = next.into_iter().map(|x| x / nn).collect();
                    if converged {
                        break;
                    }
                }
                estimate
            }
            LocalObjective::Quadratic { .. } => 1.0,
        }
    }
}

/// Contiguous shards; the first `len % n_nodes` shards get one extra sample.
pub fn partition(ds: &Dataset, n_nodes: usize, c: f64) -> Result<Vec<LocalObjective>> {
    check_c(c)?;
    if n_nodes == 0 || n_nodes > ds.len() {
        return Err(Error::InvalidPartition(format!(
            "cannot split {} samples across {n_nodes} nodes",
            ds.len()
        )));
    }
    let base = ds.len() / n_nodes;
    let extra = ds.len() % n_nodes;
    let mut start = 0;
    (0..n_nodes)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let end = start + size;
            let x = ds.x[start * ds.dim..end * ds.dim].to_vec();
            let y = ds.y[start..end].to_vec();
            start = end;
            TukeyShard::new(ds.dim, x, y, c).map(LocalObjective::Tukey)
        })
        .collect()
}

/// `f = (1/n) Σ f_i` together with its known minimizer.
#[derive(Debug, Clone)]
pub struct GlobalObjective {
    locals: Vec<Arc<LocalObjective>>,
    reference: Vec<f64>,
    f_star: f64,
}

impl GlobalObjective {
    /// `reference` is the target of the estimation error (w* or the
    /// minimizer) and `f_star` the optimal value.
    pub fn new(locals: Vec<Arc<LocalObjective>>, reference: Vec<f64>, f_star: f64) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::EmptyInput("local objectives"));
        }
        let dim = locals[0].dim();
        if locals.iter().any(|l| l.dim() != dim) || reference.len() != dim {
            return Err(Error::InvalidDimension("local objectives disagree on dimension".into()));
        }
        Ok(Self {
            locals,
            reference,
            f_star,
        })
    }

    pub fn locals(&self) -> &[Arc<LocalObjective>] {
        &self.locals
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        let losses: Vec<f64> = self.locals.iter().map(|l| l.loss(w)).collect();
        crate::vecops::mean(&losses)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let grads: Vec<Vec<f64>> = self.locals.iter().map(|l| l.gradient(w)).collect();
        mean_of(grads.iter().map(Vec::as_slice), self.dim())
    }

    /// Largest per-node smoothness bound.
    pub fn smoothness_bound(&self) -> f64 {
        self.locals
            .iter()
            .map(|l| l.smoothness_bound())
            .fold(0.0, f64::max)
    }
}

/// Global objective of the regression experiment (`f* = 0` at `w*`).
pub fn regression_objective(ds: &Dataset, locals: &[LocalObjective]) -> Result<GlobalObjective> {
    GlobalObjective::new(
        locals.iter().cloned().map(Arc::new).collect(),
        ds.w_star().to_vec(),
        0.0,
    )
}

/// Stochastic first-order oracle of one node.
#[derive(Debug, Clone)]
pub struct Oracle {
    objective: Arc<LocalObjective>,
    noise: NoiseSpec,
    batch: Option<usize>,
    stream: RngStream,
}

impl Oracle {
    pub fn new(objective: Arc<LocalObjective>, noise: NoiseSpec, batch: Option<usize>, stream: RngStream) -> Result<Self> {
        noise.validate()?;
        if batch == Some(0) {
            return Err(Error::EmptyBatch);
        }
        Ok(Self {
            objective,
            noise,
            batch,
            stream,
        })
    }

    pub fn objective(&self) -> &Arc<LocalObjective> {
        &self.objective
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn stream(&self) -> &RngStream {
        &self.stream
    }

    /// Exact local gradient (full shard or a with-replacement minibatch)
    /// plus one draw of the injected noise.
    pub fn stochastic_gradient(&mut self, w: &[f64]) -> Result<Vec<f64>> {
        let mut grad = match self.batch {
            None => self.objective.gradient(w),
            Some(b) => {
                let count = self.objective.sample_count();
                let idx: Vec<usize> = (0..b).map(|_| self.stream.below(count)).collect();
                self.objective.local_gradient(w, &idx)?
            }
        };
        if !matches!(self.noise, NoiseSpec::None) {
            let noise = self.noise.sample(&mut self.stream, grad.len())?;
            for (g, z) in grad.iter_mut().zip(noise) {
                *g += z;
            }
        }
        Ok(grad)
    }
}

/// Heterogeneous scalar quadratics on a complete graph where per-node
/// normalization without tracking freezes the iterates.
#[derive(Debug, Clone)]
pub struct Claim1Instance {
    pub objectives: Vec<LocalObjective>,
    pub mixing: MixingMatrix,
    pub x0: f64,
    pub a: f64,
    pub b: f64,
}

/// Slack added to `2B + 1` when placing the second center.
pub const CLAIM1_MARGIN: f64 = 0.5;

pub fn claim1_instance(n: usize, bound: f64) -> Result<Claim1Instance> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::param("n", format!("needs a positive even node count, got {n}")));
    }
    if !(bound >= 1.0 && bound.is_finite()) {
        return Err(Error::param("bound", format!("needs B >= 1, got {bound}")));
    }
    let a = 0.0;
    let b = a + 2.0 * bound + 1.0 + CLAIM1_MARGIN;
    let objectives = (0..n)
        .map(|i| LocalObjective::quadratic_scalar(if i < n / 2 { a } else { b }))
        .collect();
    Ok(Claim1Instance {
        objectives,
        mixing: MixingMatrix::averaging(n)?,
        x0: a + 0.5,
        a,
        b,
    })
}

impl Claim1Instance {
    pub fn minimizer(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn global_objective(&self) -> Result<GlobalObjective> {
        let m = self.minimizer();
        let locals: Vec<Arc<LocalObjective>> = self.objectives.iter().cloned().map(Arc::new).collect();
        let f_star = {
            let losses: Vec<f64> = locals.iter().map(|l| l.loss(&[m])).collect();
            pairwise_sum(&losses) / locals.len() as f64
        };
        GlobalObjective::new(locals, vec![m], f_star)
    }
}
