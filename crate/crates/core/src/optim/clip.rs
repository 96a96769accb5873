//! Clipping operators used by the clipped baselines.

/// `g · min(1, τ/‖g‖)`.
pub fn clip_l2(g: &[f64], tau: f64) -> Vec<f64> {
    let n = crate::vecops::norm(g);
    if n <= tau {
        return g.to_vec();
    }
    let scale = tau / n;
    g.iter().map(|v| v * scale).collect()
}

/// Clamp each coordinate to `[−τ, τ]`.
pub fn clip_componentwise(g: &[f64], tau: f64) -> Vec<f64> {
    g.iter().map(|v| v.clamp(-tau, tau)).collect()
}

/// Smooth component-wise clipping at round `t`:
/// `(c_φ/√(t+1)) · y/√(y² + τ(t+1)^{3/5})`.
pub fn smooth_clip(y: f64, t: usize, c_phi: f64, tau: f64) -> f64 {
    let k = (t + 1) as f64;
    c_phi / k.sqrt() * y / (y * y + tau * k.powf(0.6)).sqrt()
}
