//! Synchronous-round decentralized optimizers.

pub mod clip;
mod engine;
pub mod schedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{run, run_with_hook, NodeState, RoundEngine, StepReport};
pub use schedule::{theorem1_hyper, theorem2_hyper, ScheduleInputs, ScheduledHyper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Gradient tracking with momentum and normalized steps.
    GtNsgdm,
    Dsgd,
    GtDsgd,
    /// Decaying step `α/(t+1)` and growing ℓ₂ clip level `τ(t+1)^{2/5}`.
    DsgdClip,
    /// Constant step, ℓ₂ clip at `τ`.
    DsgdGclip,
    /// Constant step, coordinate clamp at `τ`.
    DsgdCclip,
    /// Smoothed clipping with error feedback.
    SclipEf,
    GtAdam,
    QgDsgdm,
    /// Per-node normalized exact gradients without tracking.
    VnDsgd,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::GtNsgdm,
        Method::Dsgd,
        Method::GtDsgd,
        Method::DsgdClip,
        Method::DsgdGclip,
        Method::DsgdCclip,
        Method::SclipEf,
        Method::GtAdam,
        Method::QgDsgdm,
        Method::VnDsgd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GtNsgdm => "gt-nsgdm",
            Method::Dsgd => "dsgd",
            Method::GtDsgd => "gt-dsgd",
            Method::DsgdClip => "dsgd-clip",
            Method::DsgdGclip => "dsgd-gclip",
            Method::DsgdCclip => "dsgd-cclip",
            Method::SclipEf => "sclip-ef",
            Method::GtAdam => "gt-adam",
            Method::QgDsgdm => "qg-dsgdm",
            Method::VnDsgd => "vn-dsgd",
        }
    }

    /// Methods that maintain a tracker `y` whose network mean must equal
    /// the mean of `v`.
    pub fn is_tracking(&self) -> bool {
        matches!(self, Method::GtNsgdm | Method::GtDsgd | Method::GtAdam)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

/// Hyperparameters; each method reads only the fields it uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// Step size (η for QG-DSGDm).
    pub alpha: f64,
    /// Momentum coefficient.
    pub beta: f64,
    /// Clipping level.
    pub tau: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Cap `G` on the GT-Adam second moment.
    pub g_cap: f64,
    /// GT-Adam stabilization factor.
    pub eps: f64,
    /// QG-DSGDm buffer averaging.
    pub mu: f64,
    /// SClip-EF clipping amplitude.
    pub c_phi: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.0,
            tau: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            g_cap: f64::INFINITY,
            eps: 1e-8,
            mu: 0.9,
            c_phi: 1.0,
        }
    }
}

fn unit_interval(name: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1), got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

impl Hyper {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Check the fields `method` uses.
    pub fn validate(&self, method: Method) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        match method {
            Method::GtNsgdm => unit_interval("beta", self.beta),
            Method::DsgdClip | Method::DsgdGclip | Method::DsgdCclip => positive("tau", self.tau),
            Method::SclipEf => {
                positive("tau", self.tau)?;
                positive("c_phi", self.c_phi)?;
                if !(0.0..=1.0).contains(&self.beta) {
                    return Err(Error::param("beta", format!("must lie in [0, 1], got {}", self.beta)));
                }
                Ok(())
            }
            Method::GtAdam => {
                unit_interval("beta1", self.beta1)?;
                unit_interval("beta2", self.beta2)?;
                positive("g_cap", self.g_cap)?;
                positive("eps", self.eps)
            }
            Method::QgDsgdm => {
                positive("alpha", self.alpha)?;
                unit_interval("beta", self.beta)?;
                unit_interval("mu", self.mu)
            }
            Method::Dsgd | Method::GtDsgd | Method::VnDsgd => Ok(()),
        }
    }
}
