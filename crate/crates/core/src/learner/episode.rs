//! One episode: plan, play, update.

use rand::Rng;

use super::planning::{build_q_tables_with, build_turn_based_tables, CceSolver, JointSolver, PlanningTables};
use super::update::{update_side, SideStep};
use super::{beta_schedule, Betas, InitialState, LearnerConfig, RegressionState, Side};
use crate::error::{Error, Result};
use crate::game_model::{inverse_cdf, LinearMixtureMG, Owner, TurnBasedMG};

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 0-based step.
    pub h: usize,
    pub state: usize,
    pub action_max: usize,
    pub action_min: usize,
    pub reward: f64,
    pub next_state: usize,
    pub max: SideStep,
    pub min: SideStep,
}

impl StepRecord {
    pub fn side(&self, side: Side) -> &SideStep {
        match side {
            Side::Max => &self.max,
            Side::Min => &self.min,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based episode index `k`.
    pub episode: usize,
    pub initial_state: usize,
    pub betas: Betas,
    /// `V̄_1(s_1)`.
    pub v_up_initial: f64,
    /// `V̲_1(s_1)`.
    pub v_lo_initial: f64,
    pub steps: Vec<StepRecord>,
    pub tables: PlanningTables,
}

fn draw_initial_state<R: Rng + ?Sized>(init: &InitialState, rng: &mut R) -> usize {
    match init {
        InitialState::Fixed(s) => *s,
        InitialState::Distribution(p) => inverse_cdf(p, rng.random()),
    }
}

/// Plays the planned policy and updates the statistics. `acting` maps a
/// sampled joint action `(s, a, b)` to the `(a, b)` used to index `model`.
#[allow(clippy::too_many_arguments)]
fn play<R, F>(
    model: &LinearMixtureMG,
    acting: F,
    reg: &mut RegressionState,
    config: &LearnerConfig,
    k: usize,
    betas: Betas,
    tables: PlanningTables,
    rng: &mut R,
) -> Result<EpisodeRecord>
where
    R: Rng + ?Sized,
    F: Fn(usize, usize, usize) -> (usize, usize),
{
    let horizon = model.horizon();
    let cols = tables.num_actions_min();
    let mut state = draw_initial_state(&config.initial_state, rng);
    let initial_state = state;
    let mut steps = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let idx = inverse_cdf(tables.joint(h, state).as_slice(), rng.random());
        let (a, b) = (idx / cols, idx % cols);
        let (ma, mb) = acting(state, a, b);
        let reward = model.reward(h, state, ma, mb);
        let next_state = model.sample_next_state(h, state, ma, mb, rng);

        let mut sides = Vec::with_capacity(2);
        for side in [Side::Max, Side::Min] {
            let v_next = tables.value(side, h + 1);
            let v_sq: Vec<f64> = v_next.iter().map(|v| v * v).collect();
            let phi_v = model.phi_v(v_next, state, ma, mb)?;
            let phi_v2 = model.phi_v(&v_sq, state, ma, mb)?;
            let stats = reg.side_mut(side, h);
            let factor0 = stats.cov0.factor()?;
            sides.push(update_side(
                stats,
                phi_v,
                phi_v2,
                v_next,
                next_state,
                &factor0,
                &betas,
                horizon,
                config.variance_floor,
            )?);
        }
        let min = sides.pop().expect("two sides");
        let max = sides.pop().expect("two sides");
        steps.push(StepRecord {
            h,
            state,
            action_max: a,
            action_min: b,
            reward,
            next_state,
            max,
            min,
        });
        state = next_state;
    }
    Ok(EpisodeRecord {
        episode: k,
        initial_state,
        betas,
        v_up_initial: tables.v_up(0)[initial_state],
        v_lo_initial: tables.v_lo(0)[initial_state],
        steps,
        tables,
    })
}

/// Confidence radii the learner uses in episode `k`, including `radius_scale`.
pub fn episode_betas(config: &LearnerConfig, k: usize, dim: usize, horizon: usize) -> Result<Betas> {
    if k == 0 {
        return Err(Error::Usage("episodes are numbered from 1".into()));
    }
    let b = beta_schedule(
        k,
        config.episodes,
        dim,
        horizon,
        config.lambda,
        config.delta,
        config.param_bound,
        config.beta_constants,
    );
    Ok(Betas {
        first: b.first * config.radius_scale,
        second: b.second * config.radius_scale,
        offset: b.offset * config.radius_scale,
    })
}

/// Runs episode `k` (1-based) with the ε-CCE policy.
pub fn run_episode<R: Rng + ?Sized>(
    mg: &LinearMixtureMG,
    reg: &mut RegressionState,
    config: &LearnerConfig,
    k: usize,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let solver = CceSolver {
        epsilon: config.cce_epsilon,
    };
    run_episode_with(mg, reg, config, k, &solver, rng)
}

/// Runs episode `k` with a custom per-state joint-policy solver.
pub fn run_episode_with<R: Rng + ?Sized>(
    mg: &LinearMixtureMG,
    reg: &mut RegressionState,
    config: &LearnerConfig,
    k: usize,
    solver: &dyn JointSolver,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let betas = episode_betas(config, k, mg.dim(), mg.horizon())?;
    let tables = build_q_tables_with(mg, reg, betas.first, solver)?;
    play(mg, |_, a, b| (a, b), reg, config, k, betas, tables, rng)
}

/// Runs episode `k` of the turn-based variant. Recorded actions use the
/// embedded game's convention: the owner's action in its own slot and 0 in
/// the passive player's slot.
pub fn run_turn_based_episode<R: Rng + ?Sized>(
    tb: &TurnBasedMG,
    reg: &mut RegressionState,
    config: &LearnerConfig,
    k: usize,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let betas = episode_betas(config, k, tb.dim(), tb.horizon())?;
    let tables = build_turn_based_tables(tb, reg, betas.first)?;
    let acting = |s: usize, a: usize, b: usize| match tb.owner(s) {
        Owner::Max => (a, 0),
        Owner::Min => (b, 0),
    };
    play(tb.model(), acting, reg, config, k, betas, tables, rng)
}
