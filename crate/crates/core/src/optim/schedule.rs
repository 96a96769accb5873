//! Step-size and momentum schedules from the convergence theorems.

use log::warn;

use crate::error::{Error, Result};

/// Momentum values below this void the theorems' guarantees.
pub const MIN_THEORY_BETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledHyper {
    pub alpha: f64,
    pub beta: f64,
    /// `beta < 1/10`; the schedule is still usable but outside the theory.
    pub beta_warning: bool,
}

/// Problem constants the schedules depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInputs {
    /// `f(x̄⁰) − f*`.
    pub delta0: f64,
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// Spectral gap of the mixing matrix.
    pub lambda: f64,
    pub nodes: usize,
    pub rounds: usize,
}

impl ScheduleInputs {
    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::param("delta0", format!("must be > 0, got {}", self.delta0)));
        }
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return Err(Error::param("smoothness", format!("must be > 0, got {}", self.smoothness)));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::param("lambda", format!("must lie in [0, 1), got {}", self.lambda)));
        }
        if self.nodes == 0 {
            return Err(Error::param("nodes", "must be positive"));
        }
        if self.rounds == 0 {
            return Err(Error::param("rounds", "must be positive"));
        }
        Ok(())
    }
}

/// Four-way minimum defining the step size for a given momentum `beta`.
pub fn step_size(inputs: &ScheduleInputs, beta: f64) -> f64 {
    let ScheduleInputs {
        delta0,
        smoothness: l,
        lambda,
        nodes,
        rounds,
    } = *inputs;
    let t = rounds as f64;
    let gap = 1.0 - lambda;
    let momentum_term = (delta0 * (1.0 - beta) * gap / (4.0 * l * t)).sqrt();
    let consensus_term = (delta0 * gap / (3.5 * l * t)).sqrt();
    let network_term = (gap * gap * delta0 / (2.0 * (nodes as f64).sqrt() * l * t)).sqrt();
    1f64.min(momentum_term).min(consensus_term).min(network_term)
}

fn finish(inputs: &ScheduleInputs, one_minus_beta: f64) -> ScheduledHyper {
    let beta = 1.0 - one_minus_beta;
    let beta_warning = beta < MIN_THEORY_BETA;
    if beta_warning {
        warn!("scheduled momentum beta = {beta} is below {MIN_THEORY_BETA}; convergence guarantees do not apply");
    }
    ScheduledHyper {
        alpha: step_size(inputs, beta),
        beta,
        beta_warning,
    }
}

/// Known tail index `p`: `1 − β = T^{−p/(3p−2)}`.
pub fn theorem1_hyper(inputs: &ScheduleInputs, p: f64) -> Result<ScheduledHyper> {
    inputs.validate()?;
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", format!("tail index must lie in (1, 2], got {p}")));
    }
    let exponent = p / (3.0 * p - 2.0);
    Ok(finish(inputs, 1.0 / (inputs.rounds as f64).powf(exponent)))
}

/// Unknown tail index: `1 − β = 1/√T`.
pub fn theorem2_hyper(inputs: &ScheduleInputs) -> Result<ScheduledHyper> {
    inputs.validate()?;
    Ok(finish(inputs, 1.0 / (inputs.rounds as f64).sqrt()))
}

/// Rate exponent of the known-`p` schedule, `−(p−1)/(3p−2)`.
pub fn theorem1_exponent(p: f64) -> f64 {
    -(p - 1.0) / (3.0 * p - 2.0)
}

/// Rate exponent of the `p`-agnostic schedule, `−(p−1)/(2p)`.
pub fn theorem2_exponent(p: f64) -> f64 {
    -(p - 1.0) / (2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(rounds: usize) -> ScheduleInputs {
        ScheduleInputs {
            delta0: 1.0,
            smoothness: 1.0,
            lambda: 0.0,
            nodes: 1,
            rounds,
        }
    }

    #[test]
    fn theorem1_beta_values() {
        let h = theorem1_hyper(&inputs(1_000_000), 2.0).unwrap();
        assert_eq!(h.beta, 0.999);
        assert!(!h.beta_warning);

        let h = theorem1_hyper(&inputs(1), 2.0).unwrap();
        assert_eq!(h.beta, 0.0);
        assert!(h.beta_warning);
    }

    #[test]
    fn theorem2_beta_values() {
        assert_eq!(theorem2_hyper(&inputs(100)).unwrap().beta, 0.9);
        let h = theorem2_hyper(&inputs(4)).unwrap();
        assert_eq!(h.beta, 0.5);
        assert!(!h.beta_warning);
    }

    #[test]
    fn step_size_terms() {
        let inp = inputs(4);
        // Second argument of the minimum: sqrt(0.5 / 16).
        let momentum_term = (1.0f64 * 0.5 * 1.0 / (4.0 * 1.0 * 4.0)).sqrt();
        assert!((momentum_term - 0.17678).abs() < 1e-5);
        let h = theorem2_hyper(&inp).unwrap();
        assert_eq!(h.alpha, step_size(&inp, 0.5));
        assert!(h.alpha <= momentum_term);
    }

    #[test]
    fn shared_step_formula() {
        let inp = ScheduleInputs {
            delta0: 2.0,
            smoothness: 3.0,
            lambda: 0.5,
            nodes: 9,
            rounds: 400,
        };
        let h2 = theorem2_hyper(&inp).unwrap();
        assert_eq!(h2.alpha, step_size(&inp, h2.beta));
    }

    #[test]
    fn invalid_inputs() {
        let mut inp = inputs(10);
        inp.delta0 = 0.0;
        assert!(theorem2_hyper(&inp).is_err());
        let mut inp = inputs(10);
        inp.lambda = 1.0;
        assert!(theorem2_hyper(&inp).is_err());
        assert!(theorem1_hyper(&inputs(10), 1.0).is_err());
        assert!(theorem1_hyper(&inputs(0), 1.5).is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(theorem1_exponent(2.0), -0.25);
        assert!((theorem2_exponent(1.5) + 1.0 / 6.0).abs() < 1e-15);
    }
}
