//! Optimistic/pessimistic value-targeted regression for two-player linear
//! mixture games, with variance-weighted parameter estimates.
//!
//! Each episode the learner
//! 1. plans backwards over `h` with an upper table `Q̄` (max side, bonus
//!    added) and a lower table `Q̲` (min side, bonus subtracted),
//! 2. picks a joint policy per state by solving an ε-CCE of `(Q̄, Q̲)`,
//! 3. plays the episode, and
//! 4. feeds `φ_V` and `φ_{V²}` for both sides into weighted ridge regressions.
//!
//! The turn-based variant replaces the CCE step with greedy actions of the
//! state's owner.

mod episode;
mod planning;
mod update;

pub use episode::{episode_betas, run_episode, run_episode_with, run_turn_based_episode, EpisodeRecord, StepRecord};
pub use planning::{
    build_q_tables, build_q_tables_with, build_turn_based_tables, CceSolver, GreedyTurnSolver, JointSolver,
    PlanningTables,
};
pub use update::{offset, sigma_bar, update_side, variance_estimate, SideStep};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ridge_solve, CorrelationVector, WeightedCovariance};

/// Which player's statistics: max uses the upper value `V̄`, min the lower `V̲`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Max,
    Min,
}

/// Lower bound on the regression variance proxy `σ̄²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceFloor {
    /// `H²/d`.
    #[default]
    Standard,
    /// `H²/(4d)`.
    Quarter,
}

impl VarianceFloor {
    pub fn value(self, horizon: usize, dim: usize) -> f64 {
        let h2 = (horizon * horizon) as f64;
        match self {
            VarianceFloor::Standard => h2 / dim as f64,
            VarianceFloor::Quarter => h2 / (4.0 * dim as f64),
        }
    }
}

/// Constants inside the confidence radii.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaConstants {
    /// `log(4k²H/δ)`; the second-moment radius uses `K` and `log(4k²H/(dδ))`.
    #[default]
    Stated,
    /// `log(8k²H/δ)` throughout; the second-moment radius uses `k`.
    Conservative,
}

/// How the first state of every episode is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Fixed(usize),
    /// Drawn with one uniform per episode.
    Distribution(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Fixed(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub delta: f64,
    /// Total number of episodes `K`.
    pub episodes: usize,
    pub cce_epsilon: f64,
    /// Bound `B` on `‖θ*_h‖₂`.
    pub param_bound: f64,
    pub variance_floor: VarianceFloor,
    pub beta_constants: BetaConstants,
    pub initial_state: InitialState,
    /// Multiplier applied to every confidence radius. `1.0` keeps the
    /// radii that carry the coverage guarantee.
    pub radius_scale: f64,
}

impl LearnerConfig {
    /// Defaults: `λ = 1/B²`, `δ = 0.05`, `ε = √(H/K)`.
    pub fn new(param_bound: f64, horizon: usize, episodes: usize) -> Self {
        LearnerConfig {
            lambda: 1.0 / (param_bound * param_bound),
            delta: 0.05,
            episodes,
            cce_epsilon: cce_epsilon_default(horizon, episodes),
            param_bound,
            variance_floor: VarianceFloor::default(),
            beta_constants: BetaConstants::default(),
            initial_state: InitialState::default(),
            radius_scale: 1.0,
        }
    }

    pub fn validate(&self, num_states: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Usage(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Usage(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.episodes == 0 {
            return Err(Error::Usage("the number of episodes must be positive".into()));
        }
        if !(self.cce_epsilon.is_finite() && self.cce_epsilon >= 0.0) {
            return Err(Error::Usage(format!(
                "epsilon must be nonnegative, got {}",
                self.cce_epsilon
            )));
        }
        if !(self.radius_scale.is_finite() && self.radius_scale >= 0.0) {
            return Err(Error::Usage(format!(
                "radius scale must be nonnegative, got {}",
                self.radius_scale
            )));
        }
        if !(self.param_bound.is_finite() && self.param_bound > 0.0) {
            return Err(Error::Usage(format!(
                "parameter bound must be positive, got {}",
                self.param_bound
            )));
        }
        match &self.initial_state {
            InitialState::Fixed(s) if *s >= num_states => Err(Error::Usage(format!(
                "initial state {s} out of range for {num_states} states"
            ))),
            InitialState::Distribution(p)
                if p.len() != num_states
                    || p.iter().any(|x| !(*x >= 0.0))
                    || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 =>
            {
                Err(Error::Usage(
                    "initial-state distribution must be a probability vector over the states".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// `√(H/K)`, i.e. `H/√T` with `T = KH`.
pub fn cce_epsilon_default(horizon: usize, episodes: usize) -> f64 {
    (horizon as f64 / episodes as f64).sqrt()
}

/// Confidence radii for one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Betas {
    /// Radius of the first-moment confidence set, also the planning bonus scale.
    pub first: f64,
    /// Radius for the second-moment estimate.
    pub second: f64,
    /// Enlarged first-moment radius used in the variance offset.
    pub offset: f64,
}

/// Confidence radii at episode `k` (1-based). Natural logarithms.
#[allow(clippy::too_many_arguments)]
pub fn beta_schedule(
    k: usize,
    episodes: usize,
    dim: usize,
    horizon: usize,
    lambda: f64,
    delta: f64,
    bound: f64,
    constants: BetaConstants,
) -> Betas {
    let k_f = k as f64;
    let d = dim as f64;
    let h = horizon as f64;
    let h4 = h.powi(4);
    let prior = lambda.sqrt() * bound;
    let det = (1.0 + k_f / lambda).ln();
    let (conf, conf_second, second_count) = match constants {
        BetaConstants::Stated => (
            (4.0 * k_f * k_f * h / delta).ln(),
            (4.0 * k_f * k_f * h / (d * delta)).ln(),
            episodes as f64,
        ),
        BetaConstants::Conservative => {
            let c = (8.0 * k_f * k_f * h / delta).ln();
            (c, c, k_f)
        }
    };
    let first = 16.0 * (d * det * conf).sqrt() + 8.0 * d.sqrt() * conf + prior;
    let second = 16.0 * (d * h4 * (1.0 + second_count * h4 / (d * lambda)).ln() * conf_second).sqrt()
        + 8.0 * h * h * conf
        + prior;
    let offset = 16.0 * d * (det * conf).sqrt() + 8.0 * d.sqrt() * conf + prior;
    Betas { first, second, offset }
}

/// Ridge statistics of one side at one step.
#[derive(Clone, Debug)]
pub struct SideStats {
    pub cov0: WeightedCovariance,
    pub b0: CorrelationVector,
    pub theta0: DVector<f64>,
    pub cov1: WeightedCovariance,
    pub b1: CorrelationVector,
    pub theta1: DVector<f64>,
}

impl SideStats {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(SideStats {
            cov0: WeightedCovariance::new(dim, lambda)?,
            b0: CorrelationVector::new(dim),
            theta0: DVector::zeros(dim),
            cov1: WeightedCovariance::new(dim, lambda)?,
            b1: CorrelationVector::new(dim),
            theta1: DVector::zeros(dim),
        })
    }

    /// Recomputes both estimates from scratch factorizations.
    pub fn refresh(&mut self) -> Result<()> {
        self.theta0 = ridge_solve(&self.cov0, &self.b0)?;
        self.theta1 = ridge_solve(&self.cov1, &self.b1)?;
        Ok(())
    }
}

/// All regression statistics of a run, per side and step.
#[derive(Clone, Debug)]
pub struct RegressionState {
    max: Vec<SideStats>,
    min: Vec<SideStats>,
}

impl RegressionState {
    pub fn new(dim: usize, horizon: usize, lambda: f64) -> Result<Self> {
        let fresh = || {
            (0..horizon)
                .map(|_| SideStats::new(dim, lambda))
                .collect::<Result<Vec<_>>>()
        };
        Ok(RegressionState {
            max: fresh()?,
            min: fresh()?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.max.len()
    }

    pub fn dim(&self) -> usize {
        self.max.first().map_or(0, |s| s.theta0.len())
    }

    pub fn side(&self, side: Side, h: usize) -> &SideStats {
        match side {
            Side::Max => &self.max[h],
            Side::Min => &self.min[h],
        }
    }

    pub fn side_mut(&mut self, side: Side, h: usize) -> &mut SideStats {
        match side {
            Side::Max => &mut self.max[h],
            Side::Min => &mut self.min[h],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_first_radius_small_example() {
        let b = beta_schedule(1, 1, 1, 2, 1.0, 0.1, 1.0, BetaConstants::Stated);
        let ln80 = 80f64.ln();
        let want = 16.0 * (2f64.ln() * ln80).sqrt() + 8.0 * ln80 + 1.0;
        assert!((b.first - want).abs() < 1e-12);
        assert!((b.first - 63.94).abs() < 0.01);
    }

    #[test]
    fn beta_first_radius_monotone() {
        let mut prev = 0.0;
        for k in 1..=100 {
            let b = beta_schedule(k, 100, 3, 4, 0.5, 0.05, 2.0, BetaConstants::Stated);
            assert!(b.first >= prev);
            prev = b.first;
        }
    }

    #[test]
    fn beta_offset_radius_dominates() {
        for k in [1, 7, 250] {
            let b = beta_schedule(k, 1000, 4, 3, 1.0, 0.05, 1.0, BetaConstants::Stated);
            let det = (1.0 + k as f64).ln();
            let conf = (4.0 * (k * k) as f64 * 3.0 / 0.05).ln();
            let want = 16.0 * (4.0 - 2.0) * (det * conf).sqrt();
            assert!((b.offset - b.first - want).abs() < 1e-9);
            assert!(b.offset > b.first);
        }
        let b = beta_schedule(5, 10, 1, 2, 1.0, 0.1, 1.0, BetaConstants::Conservative);
        assert!((b.offset - b.first).abs() < 1e-12);
    }

    #[test]
    fn conservative_constants_are_larger() {
        let s = beta_schedule(10, 10, 2, 3, 1.0, 0.1, 1.0, BetaConstants::Stated);
        let c = beta_schedule(10, 10, 2, 3, 1.0, 0.1, 1.0, BetaConstants::Conservative);
        assert!(c.first > s.first);
        assert!(c.offset > s.offset);
    }

    #[test]
    fn epsilon_defaults() {
        assert_eq!(cce_epsilon_default(5, 5), 1.0);
        assert!((cce_epsilon_default(4, 400) - 0.1).abs() < 1e-15);
        assert!(cce_epsilon_default(3, 1000) > cce_epsilon_default(3, 1001));
    }

    #[test]
    fn floors() {
        assert_eq!(VarianceFloor::Standard.value(2, 4), 1.0);
        assert_eq!(VarianceFloor::Quarter.value(2, 4), 0.25);
    }

    #[test]
    fn config_validation() {
        let mut c = LearnerConfig::new(2.0, 3, 10);
        assert_eq!(c.lambda, 0.25);
        assert!(c.validate(3).is_ok());
        c.initial_state = InitialState::Fixed(3);
        assert!(c.validate(3).is_err());
        c.initial_state = InitialState::Distribution(vec![0.5, 0.5, 0.1]);
        assert!(c.validate(3).is_err());
        c.initial_state = InitialState::Distribution(vec![0.5, 0.25, 0.25]);
        assert!(c.validate(3).is_ok());
        c.delta = 1.0;
        assert!(c.validate(3).is_err());
    }
}
