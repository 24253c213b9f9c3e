//! Per-step statistics update for one side.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Betas, SideStats, VarianceFloor};
use crate::error::Result;
use crate::linalg::CovarianceFactor;

/// Everything computed while updating one side at one visited step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideStep {
    /// `φ_V(s,a,b)` for this side's next-step value.
    pub phi_v: Vec<f64>,
    /// `φ_{V²}(s,a,b)`.
    pub phi_v2: Vec<f64>,
    /// `V(s')`.
    pub target: f64,
    pub var_est: f64,
    pub offset: f64,
    pub sigma_bar: f64,
    /// `‖Σ⁽⁰⁾^{-1/2} φ_V‖₂` before the update.
    pub bonus: f64,
    /// The next-step value vector this side regressed on.
    pub v_next: Vec<f64>,
}

impl SideStep {
    /// Regression weight `σ̄⁻²` applied to the first-moment system.
    pub fn weight(&self) -> f64 {
        self.sigma_bar.powi(-2)
    }
}

/// `[⟨φ_{V²}, θ⁽¹⁾⟩]_{[0,H²]} − ([⟨φ_V, θ⁽⁰⁾⟩]_{[-H,H]})²`. May be negative.
pub fn variance_estimate(
    phi_v: &DVector<f64>,
    phi_v2: &DVector<f64>,
    theta0: &DVector<f64>,
    theta1: &DVector<f64>,
    horizon: usize,
) -> f64 {
    let h = horizon as f64;
    let second = phi_v2.dot(theta1).clamp(0.0, h * h);
    let first = phi_v.dot(theta0).clamp(-h, h);
    second - first * first
}

/// `min{H², β₁‖Σ⁽¹⁾^{-1/2}φ_{V²}‖} + min{H², 2Hβ₂‖Σ⁽⁰⁾^{-1/2}φ_V‖}`.
pub fn offset(
    phi_v: &DVector<f64>,
    phi_v2: &DVector<f64>,
    factor0: &CovarianceFactor,
    factor1: &CovarianceFactor,
    beta_second: f64,
    beta_offset: f64,
    horizon: usize,
) -> Result<f64> {
    let h = horizon as f64;
    let second = (beta_second * factor1.bonus_norm(phi_v2)?).min(h * h);
    let first = (2.0 * h * beta_offset * factor0.bonus_norm(phi_v)?).min(h * h);
    Ok(second + first)
}

/// `√max{floor, var_est + offset}`.
pub fn sigma_bar(var_est: f64, offset: f64, horizon: usize, dim: usize, floor: VarianceFloor) -> f64 {
    floor.value(horizon, dim).max(var_est + offset).sqrt()
}

/// Applies one observation to a side's statistics: the first-moment system
/// with weight `σ̄⁻²` and target `V(s')`, the second-moment system with unit
/// weight and target `V(s')²`, then refreshes both estimates.
///
/// `factor0` must factor the current `Σ⁽⁰⁾` of `stats`.
#[allow(clippy::too_many_arguments)]
pub fn update_side(
    stats: &mut SideStats,
    phi_v: DVector<f64>,
    phi_v2: DVector<f64>,
    v_next: &[f64],
    s_next: usize,
    factor0: &CovarianceFactor,
    betas: &Betas,
    horizon: usize,
    floor: VarianceFloor,
) -> Result<SideStep> {
    let dim = phi_v.len();
    let factor1 = stats.cov1.factor()?;
    let var_est = variance_estimate(&phi_v, &phi_v2, &stats.theta0, &stats.theta1, horizon);
    let off = offset(&phi_v, &phi_v2, factor0, &factor1, betas.second, betas.offset, horizon)?;
    let sb = sigma_bar(var_est, off, horizon, dim, floor);
    let bonus = factor0.bonus_norm(&phi_v)?;
    let target = v_next[s_next];
    let weight = sb.powi(-2);

    stats.cov0.rank_one_update(&phi_v, weight)?;
    stats.b0.add(&phi_v, target, weight)?;
    stats.cov1.rank_one_update(&phi_v2, 1.0)?;
    stats.b1.add(&phi_v2, target * target, 1.0)?;
    stats.refresh()?;

    Ok(SideStep {
        phi_v: phi_v.as_slice().to_vec(),
        phi_v2: phi_v2.as_slice().to_vec(),
        target,
        var_est,
        offset: off,
        sigma_bar: sb,
        bonus,
        v_next: v_next.to_vec(),
    })
}
