//! Hyperparameter grids and their Cartesian expansion.

use std::path::Path;

use gtnsgdm_core::optim::{Hyper, Method};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const STEP_SIZES: [f64; 13] = [1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 0.5, 1.0, 5.0, 10.0];
const MOMENTA: [f64; 11] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
const CLIP_LEVELS: [f64; 11] = [1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0];
const SCLIP_STEP_SIZES: [f64; 6] = [1e-3, 1e-2, 0.1, 1.0, 10.0, 30.0];
const SCLIP_MOMENTA: [f64; 5] = [1e-2, 0.1, 0.5, 0.8, 0.99];
const SCLIP_AMPLITUDES: [f64; 6] = [1.0, 5.0, 10.0, 20.0, 30.0, 50.0];
const SCLIP_LEVELS: [f64; 5] = [0.1, 1.0, 10.0, 50.0, 100.0];

/// Value sets per hyperparameter; absent fields keep the config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub beta1: Option<Vec<f64>>,
    pub beta2: Option<Vec<f64>>,
    pub g_cap: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub c_phi: Option<Vec<f64>>,
}

impl Grid {
    /// Default search sets of the synthetic experiments.
    pub fn defaults_for(method: Method) -> Self {
        let alpha = Some(STEP_SIZES.to_vec());
        match method {
            Method::GtNsgdm => Grid {
                alpha,
                beta: Some(MOMENTA.to_vec()),
                ..Grid::default()
            },
            Method::DsgdClip | Method::DsgdGclip | Method::DsgdCclip => Grid {
                alpha,
                tau: Some(CLIP_LEVELS.to_vec()),
                ..Grid::default()
            },
            Method::SclipEf => Grid {
                alpha: Some(SCLIP_STEP_SIZES.to_vec()),
                beta: Some(SCLIP_MOMENTA.to_vec()),
                tau: Some(SCLIP_LEVELS.to_vec()),
                c_phi: Some(SCLIP_AMPLITUDES.to_vec()),
                ..Grid::default()
            },
            _ => Grid {
                alpha,
                ..Grid::default()
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(format!("grid: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    fn axes(&self) -> Vec<(&'static str, &Vec<f64>)> {
        [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("tau", &self.tau),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("g_cap", &self.g_cap),
            ("eps", &self.eps),
            ("mu", &self.mu),
            ("c_phi", &self.c_phi),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.as_ref().map(|v| (name, v)))
        .collect()
    }

    /// Cartesian product applied on top of `base`, first axis outermost.
    pub fn expand(&self, base: Hyper) -> Result<Vec<Hyper>, CliError> {
        let axes = self.axes();
        if axes.is_empty() {
            return Err(CliError::invalid("grid", "no hyperparameter axes given"));
        }
        if let Some((name, _)) = axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(CliError::invalid(format!("grid.{name}"), "empty value set"));
        }
        let mut out = vec![base];
        for (name, values) in axes {
            out = out
                .into_iter()
                .flat_map(|h| values.iter().map(move |&v| set_field(h, name, v)))
                .collect();
        }
        Ok(out)
    }
}

fn set_field(mut h: Hyper, name: &str, v: f64) -> Hyper {
    match name {
        "alpha" => h.alpha = v,
        "beta" => h.beta = v,
        "tau" => h.tau = v,
        "beta1" => h.beta1 = v,
        "beta2" => h.beta2 = v,
        "g_cap" => h.g_cap = v,
        "eps" => h.eps = v,
        "mu" => h.mu = v,
        "c_phi" => h.c_phi = v,
        _ => unreachable!("unknown grid axis {name}"),
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes() {
        let base = Hyper::default();
        assert_eq!(Grid::defaults_for(Method::GtNsgdm).expand(base).unwrap().len(), 143);
        assert_eq!(Grid::defaults_for(Method::Dsgd).expand(base).unwrap().len(), 13);
        assert_eq!(Grid::defaults_for(Method::DsgdClip).expand(base).unwrap().len(), 143);
        assert_eq!(Grid::defaults_for(Method::SclipEf).expand(base).unwrap().len(), 900);
    }

    #[test]
    fn expansion_order_and_values() {
        let grid = Grid::from_toml("alpha = [0.1, 0.2]\nbeta = [0.5, 0.9]").unwrap();
        let hs = grid.expand(Hyper::default()).unwrap();
        let pairs: Vec<(f64, f64)> = hs.iter().map(|h| (h.alpha, h.beta)).collect();
        assert_eq!(pairs, vec![(0.1, 0.5), (0.1, 0.9), (0.2, 0.5), (0.2, 0.9)]);
        assert_eq!(hs[0].tau, Hyper::default().tau);
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(Grid::default().expand(Hyper::default()).is_err());
        assert!(Grid::from_toml("alpha = []").unwrap().expand(Hyper::default()).is_err());
        assert!(Grid::from_toml("gamma = [1.0]").is_err());
    }
}
