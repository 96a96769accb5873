//! TOML experiment descriptions.

use std::path::{Path, PathBuf};

use gtnsgdm_core::noise::NoiseSpec;
use gtnsgdm_core::objective::TUKEY_C;
use gtnsgdm_core::optim::{Hyper, Method};
use gtnsgdm_core::topology::{TopologyKind, Weighting};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub rounds: usize,
    #[serde(default = "default_probe_every")]
    pub probe_every: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub method: Method,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub hyper: Hyper,
    /// Replaces `hyper.alpha` and `hyper.beta` by a theorem schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_probe_every() -> usize {
    10
}

fn default_repeats() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub n: usize,
    /// Metropolis for undirected graphs, uniform for directed ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Weighting>,
    /// Adjacency list for `kind = "custom"`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    TukeyRegression {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        batch: Option<usize>,
    },
    /// Two-valued quadratics on a complete graph with gap bound `bound`.
    Claim1 { bound: f64 },
}

fn default_samples() -> usize {
    1000
}

fn default_dim() -> usize {
    20
}

fn default_c() -> f64 {
    TUKEY_C
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleRule {
    Theorem1,
    Theorem2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub rule: ScheduleRule,
    /// Tail index for `theorem1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Overrides `f(x̄⁰) − f*` computed from the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    /// Overrides the smoothness bound computed from the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Values are topology kinds.
    Lambda,
    /// Values are noise levels.
    Sigma,
    /// Values are node counts.
    N,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "lambda" => Ok(SweepAxis::Lambda),
            "sigma" => Ok(SweepAxis::Sigma),
            "n" => Ok(SweepAxis::N),
            other => Err(CliError::invalid("sweep.axis", format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; a relative `topology.file` is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(file), Some(dir)) = (cfg.topology.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn weighting(&self) -> Weighting {
        self.topology.weighting.unwrap_or(match self.topology.kind {
            TopologyKind::DirectedExponential => Weighting::Uniform,
            _ => Weighting::Metropolis,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.probe_every == 0 {
            return Err(CliError::invalid("probe_every", "must be positive"));
        }
        if self.repeats == 0 {
            return Err(CliError::invalid("repeats", "must be positive"));
        }
        let t = &self.topology;
        if t.n == 0 {
            return Err(CliError::invalid("topology.n", "must be positive"));
        }
        if t.kind == TopologyKind::Custom && t.file.is_none() {
            return Err(CliError::invalid("topology.file", "custom topologies need an adjacency file"));
        }
        if t.kind != TopologyKind::Custom && t.file.is_some() {
            return Err(CliError::invalid("topology.file", "only custom topologies read a file"));
        }
        self.noise
            .validate()
            .map_err(|e| CliError::invalid("noise", e.to_string()))?;
        self.hyper
            .validate(self.method)
            .map_err(|e| CliError::invalid("hyper", e.to_string()))?;
        match &self.objective {
            ObjectiveConfig::TukeyRegression { samples, dim, c, batch } => {
                if *dim < 4 {
                    return Err(CliError::invalid("objective.dim", format!("must be >= 4, got {dim}")));
                }
                if *samples < t.n {
                    return Err(CliError::invalid(
                        "objective.samples",
                        format!("{samples} samples cannot cover {} nodes", t.n),
                    ));
                }
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(CliError::invalid("objective.c", format!("must be > 0, got {c}")));
                }
                if *batch == Some(0) {
                    return Err(CliError::invalid("objective.batch", "must be positive"));
                }
            }
            ObjectiveConfig::Claim1 { bound } => {
                if !(*bound >= 1.0 && bound.is_finite()) {
                    return Err(CliError::invalid("objective.bound", format!("must be >= 1, got {bound}")));
                }
                if !t.n.is_multiple_of(2) {
                    return Err(CliError::invalid("topology.n", "claim1 needs an even node count"));
                }
                if t.kind != TopologyKind::Complete {
                    return Err(CliError::invalid("topology.kind", "claim1 runs on a complete graph"));
                }
            }
        }
        if let Some(s) = &self.schedule {
            if s.rule == ScheduleRule::Theorem1 {
                match s.p {
                    Some(p) if p > 1.0 && p <= 2.0 => {}
                    Some(p) => return Err(CliError::invalid("schedule.p", format!("must lie in (1, 2], got {p}"))),
                    None => return Err(CliError::invalid("schedule.p", "theorem1 needs a tail index")),
                }
            }
            if self.method != Method::GtNsgdm {
                return Err(CliError::invalid("schedule", "theorem schedules apply to gt-nsgdm only"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::invalid("sweep.values", "must not be empty"));
            }
        }
        Ok(())
    }
}
