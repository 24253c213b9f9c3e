//! Backward planning of the upper and lower action-value tables.

use nalgebra::DVector;

use super::{RegressionState, Side};
use crate::equilibrium::{epsilon_cce, marginals, JointDistribution, MarginalPair, PayoffMatrix};
use crate::error::{Error, Result};
use crate::evaluation::MarkovPolicy;
use crate::game_model::{LinearMixtureMG, Owner, TurnBasedMG};
use crate::linalg::CovarianceFactor;

/// Picks the joint policy at one state from the two payoff tables.
pub trait JointSolver {
    fn solve(&self, state: usize, q_up: &PayoffMatrix, q_lo: &PayoffMatrix) -> Result<JointDistribution>;
}

/// ε-CCE where the max player maximizes `Q̄` and the min player minimizes `Q̲`.
#[derive(Clone, Copy, Debug)]
pub struct CceSolver {
    pub epsilon: f64,
}

impl JointSolver for CceSolver {
    fn solve(&self, _: usize, q_up: &PayoffMatrix, q_lo: &PayoffMatrix) -> Result<JointDistribution> {
        epsilon_cce(q_up, q_lo, self.epsilon)
    }
}

/// For embedded turn-based games: a point mass on the owner's greedy action
/// (`argmax_a Q̄(s,a,0)` or `argmin_b Q̲(s,0,b)`, lowest index on ties) with
/// the passive player's action fixed to 0. Since the passive axis does not
/// matter, this is an exact CCE.
#[derive(Clone, Debug)]
pub struct GreedyTurnSolver {
    pub owners: Vec<Owner>,
}

impl JointSolver for GreedyTurnSolver {
    fn solve(&self, state: usize, q_up: &PayoffMatrix, q_lo: &PayoffMatrix) -> Result<JointDistribution> {
        let (rows, cols) = (q_up.rows(), q_up.cols());
        Ok(match self.owners[state] {
            Owner::Max => {
                let a = argmax((0..rows).map(|a| q_up.get(a, 0)));
                JointDistribution::point_mass(rows, cols, a, 0)
            }
            Owner::Min => {
                let b = argmin((0..cols).map(|b| q_lo.get(0, b)));
                JointDistribution::point_mass(rows, cols, 0, b)
            }
        })
    }
}

/// First index of the maximum.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// First index of the minimum.
pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> usize {
    argmax(values.map(|v| -v))
}

/// Upper/lower tables and the per-state joint policy of one episode.
/// Step indices are 0-based; value rows run over `0..=H` with row `H` zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningTables {
    num_states: usize,
    num_actions_max: usize,
    num_actions_min: usize,
    horizon: usize,
    // [h][s][a][b]
    q_up: Vec<f64>,
    q_lo: Vec<f64>,
    // [h][s], h in 0..=H
    v_up: Vec<f64>,
    v_lo: Vec<f64>,
    // [h][s]
    joint: Vec<JointDistribution>,
}

impl PlanningTables {
    fn empty(num_states: usize, num_actions_max: usize, num_actions_min: usize, horizon: usize) -> Self {
        let q = horizon * num_states * num_actions_max * num_actions_min;
        PlanningTables {
            num_states,
            num_actions_max,
            num_actions_min,
            horizon,
            q_up: vec![0.0; q],
            q_lo: vec![0.0; q],
            v_up: vec![0.0; (horizon + 1) * num_states],
            v_lo: vec![0.0; (horizon + 1) * num_states],
            joint: Vec::with_capacity(horizon * num_states),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn num_actions_max(&self) -> usize {
        self.num_actions_max
    }
    pub fn num_actions_min(&self) -> usize {
        self.num_actions_min
    }

    fn q_offset(&self, h: usize, s: usize) -> usize {
        (h * self.num_states + s) * self.num_actions_max * self.num_actions_min
    }

    /// `Q̄_h(s,·,·)` row-major.
    pub fn q_up(&self, h: usize, s: usize) -> &[f64] {
        let off = self.q_offset(h, s);
        &self.q_up[off..off + self.num_actions_max * self.num_actions_min]
    }

    /// `Q̲_h(s,·,·)` row-major.
    pub fn q_lo(&self, h: usize, s: usize) -> &[f64] {
        let off = self.q_offset(h, s);
        &self.q_lo[off..off + self.num_actions_max * self.num_actions_min]
    }

    /// `V̄_h` over states, `h ∈ 0..=H`.
    pub fn v_up(&self, h: usize) -> &[f64] {
        &self.v_up[h * self.num_states..(h + 1) * self.num_states]
    }

    /// `V̲_h` over states, `h ∈ 0..=H`.
    pub fn v_lo(&self, h: usize) -> &[f64] {
        &self.v_lo[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn value(&self, side: Side, h: usize) -> &[f64] {
        match side {
            Side::Max => self.v_up(h),
            Side::Min => self.v_lo(h),
        }
    }

    pub fn joint(&self, h: usize, s: usize) -> &JointDistribution {
        &self.joint[h * self.num_states + s]
    }

    /// Joint policy indexed `h * S + s`.
    pub fn joint_policy(&self) -> &[JointDistribution] {
        &self.joint
    }

    pub fn marginals(&self, h: usize, s: usize) -> MarginalPair {
        marginals(self.joint(h, s))
    }

    /// The max player's marginal policy.
    pub fn max_policy(&self) -> MarkovPolicy {
        let probs = self.joint.iter().flat_map(|j| marginals(j).row).collect();
        MarkovPolicy::from_flat(self.horizon, self.num_states, self.num_actions_max, probs)
            .expect("marginals of valid joint tables are distributions")
    }

    /// The min player's marginal policy.
    pub fn min_policy(&self) -> MarkovPolicy {
        let probs = self.joint.iter().flat_map(|j| marginals(j).col).collect();
        MarkovPolicy::from_flat(self.horizon, self.num_states, self.num_actions_min, probs)
            .expect("marginals of valid joint tables are distributions")
    }
}

fn check_dims(mg: &LinearMixtureMG, reg: &RegressionState) -> Result<()> {
    if reg.horizon() != mg.horizon() || reg.dim() != mg.dim() {
        return Err(Error::Usage(format!(
            "regression state (H={}, d={}) does not match the game (H={}, d={})",
            reg.horizon(),
            reg.dim(),
            mg.horizon(),
            mg.dim()
        )));
    }
    Ok(())
}

/// `[r + ⟨θ, φ_V⟩ ± β‖Σ^{-1/2}φ_V‖]_{[-H,H]}`.
#[allow(clippy::too_many_arguments)]
fn optimistic_entry(
    mg: &LinearMixtureMG,
    h: usize,
    s: usize,
    a: usize,
    b: usize,
    value: &[f64],
    theta: &DVector<f64>,
    factor: &CovarianceFactor,
    bonus_sign: f64,
    beta: f64,
    phi: &mut DVector<f64>,
) -> Result<f64> {
    let bound = mg.horizon() as f64;
    mg.phi_v_into(value, s, a, b, phi.as_mut_slice());
    let bonus = factor.bonus_norm(phi)?;
    let q = mg.reward(h, s, a, b) + theta.dot(phi) + bonus_sign * beta * bonus;
    Ok(q.clamp(-bound, bound))
}

/// Plans one episode with the ε-CCE policy.
pub fn build_q_tables(mg: &LinearMixtureMG, reg: &RegressionState, beta: f64, epsilon: f64) -> Result<PlanningTables> {
    build_q_tables_with(mg, reg, beta, &CceSolver { epsilon })
}

/// Backward planning with an arbitrary per-state joint-policy solver.
pub fn build_q_tables_with(
    mg: &LinearMixtureMG,
    reg: &RegressionState,
    beta: f64,
    solver: &dyn JointSolver,
) -> Result<PlanningTables> {
    check_dims(mg, reg)?;
    let (n, na, nb, horizon) = (
        mg.num_states(),
        mg.num_actions_max(),
        mg.num_actions_min(),
        mg.horizon(),
    );
    let mut t = PlanningTables::empty(n, na, nb, horizon);
    let mut joints: Vec<Vec<JointDistribution>> = vec![Vec::new(); horizon];
    let mut phi = DVector::zeros(mg.dim());
    for h in (0..horizon).rev() {
        let up_next = t.v_up(h + 1).to_vec();
        let lo_next = t.v_lo(h + 1).to_vec();
        let up_stats = reg.side(Side::Max, h);
        let lo_stats = reg.side(Side::Min, h);
        let up_factor = up_stats.cov0.factor()?;
        let lo_factor = lo_stats.cov0.factor()?;
        for s in 0..n {
            let mut q_up = Vec::with_capacity(na * nb);
            let mut q_lo = Vec::with_capacity(na * nb);
            for a in 0..na {
                for b in 0..nb {
                    q_up.push(optimistic_entry(
                        mg,
                        h,
                        s,
                        a,
                        b,
                        &up_next,
                        &up_stats.theta0,
                        &up_factor,
                        1.0,
                        beta,
                        &mut phi,
                    )?);
                    q_lo.push(optimistic_entry(
                        mg,
                        h,
                        s,
                        a,
                        b,
                        &lo_next,
                        &lo_stats.theta0,
                        &lo_factor,
                        -1.0,
                        beta,
                        &mut phi,
                    )?);
                }
            }
            let off = t.q_offset(h, s);
            t.q_up[off..off + na * nb].copy_from_slice(&q_up);
            t.q_lo[off..off + na * nb].copy_from_slice(&q_lo);
            let q_up = PayoffMatrix::new(na, nb, q_up)?;
            let q_lo = PayoffMatrix::new(na, nb, q_lo)?;
            let sigma = solver.solve(s, &q_up, &q_lo)?;
            t.v_up[h * n + s] = sigma.expectation(q_up.as_slice());
            t.v_lo[h * n + s] = sigma.expectation(q_lo.as_slice());
            joints[h].push(sigma);
        }
    }
    t.joint = joints.into_iter().flatten().collect();
    Ok(t)
}

/// Planning for a turn-based game: at max-owned states the max player acts
/// greedily on `Q̄`, at min-owned states the min player acts greedily on `Q̲`;
/// the other table is read at the same action.
///
/// Tables are returned in the shape of the embedded simultaneous game
/// (`A × A`, the passive axis repeated) so the result can be compared with
/// and evaluated on [`crate::game_model::embed_turn_based`].
pub fn build_turn_based_tables(tb: &TurnBasedMG, reg: &RegressionState, beta: f64) -> Result<PlanningTables> {
    let m = tb.model();
    check_dims(m, reg)?;
    let (n, na, horizon) = (tb.num_states(), tb.num_actions(), tb.horizon());
    let mut t = PlanningTables::empty(n, na, na, horizon);
    let mut joints: Vec<Vec<JointDistribution>> = vec![Vec::new(); horizon];
    let mut phi = DVector::zeros(m.dim());
    for h in (0..horizon).rev() {
        let up_next = t.v_up(h + 1).to_vec();
        let lo_next = t.v_lo(h + 1).to_vec();
        let up_stats = reg.side(Side::Max, h);
        let lo_stats = reg.side(Side::Min, h);
        let up_factor = up_stats.cov0.factor()?;
        let lo_factor = lo_stats.cov0.factor()?;
        for s in 0..n {
            let mut q_up = Vec::with_capacity(na);
            let mut q_lo = Vec::with_capacity(na);
            for act in 0..na {
                q_up.push(optimistic_entry(
                    m,
                    h,
                    s,
                    act,
                    0,
                    &up_next,
                    &up_stats.theta0,
                    &up_factor,
                    1.0,
                    beta,
                    &mut phi,
                )?);
                q_lo.push(optimistic_entry(
                    m,
                    h,
                    s,
                    act,
                    0,
                    &lo_next,
                    &lo_stats.theta0,
                    &lo_factor,
                    -1.0,
                    beta,
                    &mut phi,
                )?);
            }
            let owner = tb.owner(s);
            let act = match owner {
                Owner::Max => argmax(q_up.iter().copied()),
                Owner::Min => argmin(q_lo.iter().copied()),
            };
            t.v_up[h * n + s] = q_up[act];
            t.v_lo[h * n + s] = q_lo[act];
            let off = t.q_offset(h, s);
            for a in 0..na {
                for b in 0..na {
                    let acting = if owner == Owner::Max { a } else { b };
                    t.q_up[off + a * na + b] = q_up[acting];
                    t.q_lo[off + a * na + b] = q_lo[acting];
                }
            }
            joints[h].push(match owner {
                Owner::Max => JointDistribution::point_mass(na, na, act, 0),
                Owner::Min => JointDistribution::point_mass(na, na, 0, act),
            });
        }
    }
    t.joint = joints.into_iter().flatten().collect();
    Ok(t)
}
