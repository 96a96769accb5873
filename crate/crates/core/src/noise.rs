//! Seeded random streams, injected-noise samplers and moment diagnostics.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counter-based random stream keyed by `(seed, node)`.
///
/// Each `(seed, node)` pair selects its own ChaCha8 stream, so draws on one
/// node never depend on how many draws other nodes have made.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    node: u64,
    counter: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, node: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(node);
        Self {
            seed,
            node,
            counter: 0,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node(&self) -> u64 {
        self.node
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.uniform() * bound as f64) as usize % bound.max(1)
    }

    /// Standard normal by the Box–Muller transform; the second variate of
    /// each pair is cached for the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Standard exponential.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.counter += 1;
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.counter += dst.len().div_ceil(8) as u64;
        self.rng.fill_bytes(dst)
    }
}

/// Law of the noise added to each coordinate of an exact gradient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    /// `N(0, variance)` per coordinate.
    Gaussian { variance: f64 },
    /// `scale · T_dof` per coordinate.
    StudentT { dof: f64, scale: f64 },
    /// `multiplier · S(alpha, skew, scale, 0)` per coordinate, 1-parameterization.
    AlphaStable {
        alpha: f64,
        skew: f64,
        scale: f64,
        #[serde(default = "one")]
        multiplier: f64,
    },
}

fn one() -> f64 {
    1.0
}


impl NoiseSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            NoiseSpec::None => "none",
            NoiseSpec::Gaussian { .. } => "gaussian",
            NoiseSpec::StudentT { .. } => "student-t",
            NoiseSpec::AlphaStable { .. } => "alpha-stable",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Gaussian { variance } => check_gaussian(variance),
            NoiseSpec::StudentT { dof, scale } => check_student_t(dof, scale),
            NoiseSpec::AlphaStable {
                alpha,
                skew,
                scale,
                multiplier,
            } => check_alpha_stable(alpha, skew, scale, multiplier),
        }
    }

    /// Largest moment order the law is known to have, capped at 2.
    pub fn tail_index(&self) -> f64 {
        match *self {
            NoiseSpec::StudentT { dof, .. } => dof.min(2.0),
            NoiseSpec::AlphaStable { alpha, .. } => alpha,
            _ => 2.0,
        }
    }

    /// Overwrite `out` with one i.i.d. draw per coordinate.
    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64]) -> Result<()> {
        match *self {
            NoiseSpec::None => {
                out.fill(0.0);
                Ok(())
            }
            NoiseSpec::Gaussian { variance } => sample_gaussian(variance, stream, out),
            NoiseSpec::StudentT { dof, scale } => sample_student_t(dof, scale, stream, out),
            NoiseSpec::AlphaStable {
                alpha,
                skew,
                scale,
                multiplier,
            } => sample_alpha_stable(alpha, skew, scale, multiplier, stream, out),
        }
    }

    pub fn sample(&self, stream: &mut RngStream, dim: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; dim];
        self.sample_into(stream, &mut out)?;
        Ok(out)
    }

    /// Copy with the family's scale knob replaced: Gaussian variance,
    /// Student-t scale, alpha-stable multiplier.
    pub fn with_level(&self, level: f64) -> NoiseSpec {
        match *self {
            NoiseSpec::None => NoiseSpec::None,
            NoiseSpec::Gaussian { .. } => NoiseSpec::Gaussian { variance: level },
            NoiseSpec::StudentT { dof, .. } => NoiseSpec::StudentT { dof, scale: level },
            NoiseSpec::AlphaStable {
                alpha, skew, scale, ..
            } => NoiseSpec::AlphaStable {
                alpha,
                skew,
                scale,
                multiplier: level,
            },
        }
    }
}

fn check_gaussian(variance: f64) -> Result<()> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::param("variance", format!("must be finite and >= 0, got {variance}")));
    }
    Ok(())
}

fn check_student_t(dof: f64, scale: f64) -> Result<()> {
    if !(dof > 1.0 && dof.is_finite()) {
        return Err(Error::param("dof", format!("mean is undefined unless dof > 1, got {dof}")));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", format!("must be finite and >= 0, got {scale}")));
    }
    Ok(())
}

fn check_alpha_stable(alpha: f64, skew: f64, scale: f64, multiplier: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::param("alpha", format!("stability must lie in (1, 2], got {alpha}")));
    }
    if !(-1.0..=1.0).contains(&skew) {
        return Err(Error::param("skew", format!("skewness must lie in [-1, 1], got {skew}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", format!("must be finite and > 0, got {scale}")));
    }
    if !multiplier.is_finite() {
        return Err(Error::param("multiplier", "must be finite"));
    }
    Ok(())
}

pub fn sample_gaussian(variance: f64, stream: &mut RngStream, out: &mut [f64]) -> Result<()> {
    check_gaussian(variance)?;
    let sd = variance.sqrt();
    for slot in out.iter_mut() {
        *slot = sd * stream.standard_normal();
    }
    Ok(())
}

/// `scale · Z / sqrt(χ²_dof / dof)` per coordinate.
pub fn sample_student_t(dof: f64, scale: f64, stream: &mut RngStream, out: &mut [f64]) -> Result<()> {
    check_student_t(dof, scale)?;
    let chi = ChiSquared::new(dof).map_err(|e| Error::param("dof", e.to_string()))?;
    for slot in out.iter_mut() {
        let z = stream.standard_normal();
        let q: f64 = chi.sample(stream);
        *slot = scale * z / (q / dof).sqrt();
    }
    Ok(())
}

/// Chambers–Mallows–Stuck map from `U ∈ (−π/2, π/2)` and `E > 0` to a
/// unit-scale `S(alpha, skew, 1, 0)` variate in the 1-parameterization.
pub fn cms_transform(alpha: f64, skew: f64, u: f64, e: f64) -> f64 {
    let tan_pa = (PI * alpha / 2.0).tan();
    let shift = (skew * tan_pa).atan() / alpha;
    let factor = (1.0 + skew * skew * tan_pa * tan_pa).powf(1.0 / (2.0 * alpha));
    let head = (alpha * (u + shift)).sin() / u.cos().powf(1.0 / alpha);
    let tail = ((u - alpha * (u + shift)).cos() / e).powf((1.0 - alpha) / alpha);
    factor * head * tail
}

/// `multiplier · scale · CMS(U, E)` per coordinate; zero mean for `alpha > 1`.
pub fn sample_alpha_stable(
    alpha: f64,
    skew: f64,
    scale: f64,
    multiplier: f64,
    stream: &mut RngStream,
    out: &mut [f64],
) -> Result<()> {
    check_alpha_stable(alpha, skew, scale, multiplier)?;
    for slot in out.iter_mut() {
        let u = PI * stream.uniform_open() - FRAC_PI_2;
        let e = stream.exponential();
        *slot = multiplier * scale * cms_transform(alpha, skew, u, e);
    }
    Ok(())
}

/// `(mean ‖s‖^p)^{1/p}` over the samples.
pub fn empirical_moment<V: AsRef<[f64]>>(samples: &[V], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if !(p > 0.0) {
        return Err(Error::param("p", format!("moment order must be > 0, got {p}")));
    }
    let powers: Vec<f64> = samples
        .iter()
        .map(|s| crate::vecops::norm(s.as_ref()).powf(p))
        .collect();
    Ok(crate::vecops::mean(&powers).powf(1.0 / p))
}

/// Least-squares slope of `log P(|X| > x)` against `log x` over the largest
/// `top_fraction` of `|values|`.
pub fn tail_slope(values: &[f64], top_fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("values"));
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let total = abs.len() as f64;
    let keep = ((total * top_fraction).round() as usize).min(abs.len());
    if keep < 3 {
        return Err(Error::InvalidInput("too few tail points for a slope".into()));
    }
    let points: Vec<(f64, f64)> = abs[..keep]
        .iter()
        .enumerate()
        .filter(|(_, x)| **x > 0.0)
        .map(|(rank, x)| (x.ln(), ((rank + 1) as f64 / total).ln()))
        .collect();
    Ok(least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Sample mean with a block-based robust standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustMean {
    pub mean: f64,
    pub median_of_means: f64,
    pub std_error: f64,
}

impl RobustMean {
    /// `|mean| / std_error`.
    pub fn z_score(&self) -> f64 {
        self.mean.abs() / self.std_error
    }
}

/// Splits `values` into `blocks` equal blocks and measures the spread of the
/// block means by `1.4826·MAD`. The standard error of the overall mean is
/// that spread times `blocks^{1/tail_index − 1}`, the aggregation law for a
/// sum of i.i.d. stable variables (`tail_index = 2` gives the usual `1/√k`).
pub fn robust_mean(values: &[f64], blocks: usize, tail_index: f64) -> Result<RobustMean> {
    if values.is_empty() {
        return Err(Error::EmptyInput("values"));
    }
    if blocks < 2 || blocks > values.len() {
        return Err(Error::InvalidInput(format!("cannot split {} values into {blocks} blocks", values.len())));
    }
    if !(tail_index > 1.0 && tail_index <= 2.0) {
        return Err(Error::param("tail_index", format!("must lie in (1, 2], got {tail_index}")));
    }
    let size = values.len() / blocks;
    let block_means: Vec<f64> = values
        .chunks_exact(size)
        .take(blocks)
        .map(crate::vecops::mean)
        .collect();
    let med = median(&block_means);
    let deviations: Vec<f64> = block_means.iter().map(|m| (m - med).abs()).collect();
    let spread = 1.4826 * median(&deviations);
    Ok(RobustMean {
        mean: crate::vecops::mean(values),
        median_of_means: med,
        std_error: spread * (blocks as f64).powf(1.0 / tail_index - 1.0),
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

/// Equal-width histogram over `[lo, hi)`; values outside are dropped.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, u64)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        if v >= lo && v < hi {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
        .collect()
}
