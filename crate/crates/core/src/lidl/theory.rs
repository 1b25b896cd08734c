//! Closed-form estimates and error terms used as validation oracles.

use crate::{Error, Result};

/// `D + (log ρ_1 − log ρ_2) / (log δ_1 − log δ_2)`.
pub fn two_point_estimate(
    log_rho_1: f64,
    log_rho_2: f64,
    delta_1: f64,
    delta_2: f64,
    ambient_dim: usize,
) -> Result<f64> {
    if !(delta_1 > 0.0 && delta_2 > 0.0) {
        return Err(Error::InvalidArgument("deltas must be positive".into()));
    }
    if delta_1 == delta_2 {
        return Err(Error::InvalidArgument("two-point estimate needs distinct deltas".into()));
    }
    Ok(ambient_dim as f64 + (log_rho_1 - log_rho_2) / (delta_1.ln() - delta_2.ln()))
}

/// Number of axis deviations strictly larger than `δ`.
pub fn hard_estimate(sigmas: &[f64], delta: f64) -> usize {
    sigmas.iter().filter(|&&s| s > delta).count()
}

/// Error `ε(t)` of the two-point estimate `1 − ε(t)` at `(t, 0, …, 0)` for
/// `N(0, 1)` on a line, with `δ_1 = ηδ` and `δ_2 = δ`.
pub fn normal_line_error(t: f64, delta: f64, eta: f64) -> f64 {
    let (d1, d2) = (eta * delta, delta);
    let (v1, v2) = (1.0 + d1 * d1, 1.0 + d2 * d2);
    ((v1 / v2).ln() + t * t * (1.0 / v1 - 1.0 / v2)) / (2.0 * (d1.ln() - d2.ln()))
}

/// Upper bound `D σ_{d+1} λ² / (2 σ_d)` on the offset `C_λ` of
/// `log ρ_δ(0) = (d − D) log δ + M − C_λ` for `δ ∈ [τ/λ, λτ]`,
/// `τ = √(σ_d σ_{d+1})`. `d` is 1-based as in `σ_1 ≥ … ≥ σ_D`.
pub fn gaussian_step_bound(sigmas: &[f64], d: usize, lambda: f64) -> Result<f64> {
    let big_d = sigmas.len();
    if d < 1 || d >= big_d {
        return Err(Error::InvalidArgument(format!("need 1 ≤ d < D = {big_d}, got {d}")));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 1, got {lambda}")));
    }
    Ok(big_d as f64 * sigmas[d] / (2.0 * sigmas[d - 1]) * lambda * lambda)
}

/// Geometric midpoint `√(σ_d σ_{d+1})` between consecutive deviations.
pub fn gaussian_step_midpoint(sigmas: &[f64], d: usize) -> f64 {
    (sigmas[d - 1] * sigmas[d]).sqrt()
}

/// Smallest `δ` that ignores measurement noise of deviation `σ`.
pub fn recommended_delta_min(noise_sigma: f64) -> f64 {
    10.0 * noise_sigma
}

/// `ε_δ = Σ_{k≠n} exp(−((ξ_n − ξ_k)/δ)²/2)`, the relative contribution of the
/// other atoms to the perturbed density at atom `n`.
pub fn point_set_excess(positions: &[f64], n: usize, delta: f64) -> f64 {
    positions
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != n)
        .map(|(_, &p)| {
            let r = (positions[n] - p) / delta;
            (-0.5 * r * r).exp()
        })
        .sum()
}

/// Bound `4 e^{−λ²}` on [`point_set_excess`] when `δ < η/(√2 λ)`.
pub fn point_set_excess_bound(lambda: f64) -> f64 {
    4.0 * (-lambda * lambda).exp()
}
