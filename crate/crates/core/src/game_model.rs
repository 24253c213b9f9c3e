//! Episodic linear mixture Markov games.
//!
//! A game is described by a known feature tensor `φ(s'|s,a,b) ∈ ℝᵈ` and
//! per-step parameters `θ*_h`, with transition kernel
//! `P_h(s'|s,a,b) = ⟨φ(s'|s,a,b), θ*_h⟩`. States and actions are enumerated
//! `0..n`. Steps are 0-based internally (`h ∈ 0..H`).
//!
//! A single-agent MDP is represented as a game whose min player has exactly
//! one action; [`TurnBasedMG`] wraps such a model together with a state
//! ownership partition.

use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a kernel row sum from one.
pub const KERNEL_SUM_TOL: f64 = 1e-9;
/// Most negative transition probability accepted (and clamped to zero).
pub const NEGATIVE_PROB_TOL: f64 = 1e-12;
/// Slack on `‖φ_V‖₂ ≤ 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Kernel table `P(s'|s,a,b)` laid out as `[s][a][b][s']`.
pub type Kernel = Vec<Vec<Vec<Vec<f64>>>>;
/// Reward table `r(s,a,b)` laid out as `[s][a][b]`.
pub type RewardTable = Vec<Vec<Vec<f64>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameShape {
    pub num_states: usize,
    pub num_actions_max: usize,
    pub num_actions_min: usize,
    pub horizon: usize,
    pub dim: usize,
}

impl GameShape {
    fn check(&self) -> Result<()> {
        if self.num_states == 0
            || self.num_actions_max == 0
            || self.num_actions_min == 0
            || self.horizon == 0
            || self.dim == 0
        {
            return Err(Error::Validation(format!(
                "all dimensions must be positive, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Number of `(s, a, b)` triples.
    pub fn num_triples(&self) -> usize {
        self.num_states * self.num_actions_max * self.num_actions_min
    }
}

/// A finite-state, time-inhomogeneous, episodic `B`-bounded linear mixture game.
#[derive(Clone, Debug)]
pub struct LinearMixtureMG {
    shape: GameShape,
    // [s'][s][a][b][i]
    features: Vec<f64>,
    theta_star: Vec<DVector<f64>>,
    // [h][s][a][b]
    reward: Vec<f64>,
    param_bound: f64,
    // [h][s][a][b][s'], derived from features and theta_star
    kernel: Vec<f64>,
}

impl LinearMixtureMG {
    /// Builds and validates an instance. `features` is flat row-major
    /// `[s'][s][a][b][i]`, `reward` is flat `[h][s][a][b]`.
    pub fn new(
        shape: GameShape,
        features: Vec<f64>,
        theta_star: Vec<DVector<f64>>,
        reward: Vec<f64>,
        param_bound: f64,
    ) -> Result<Self> {
        shape.check()?;
        let s = shape.num_states;
        let triples = shape.num_triples();
        if features.len() != s * triples * shape.dim {
            return Err(Error::Validation(format!(
                "feature tensor has {} entries, expected {}",
                features.len(),
                s * triples * shape.dim
            )));
        }
        if theta_star.len() != shape.horizon {
            return Err(Error::Validation(format!(
                "expected {} parameter vectors, got {}",
                shape.horizon,
                theta_star.len()
            )));
        }
        if let Some(t) = theta_star.iter().find(|t| t.len() != shape.dim) {
            return Err(Error::Validation(format!(
                "parameter vector of length {} in a dimension-{} game",
                t.len(),
                shape.dim
            )));
        }
        if reward.len() != shape.horizon * triples {
            return Err(Error::Validation(format!(
                "reward table has {} entries, expected {}",
                reward.len(),
                shape.horizon * triples
            )));
        }
        let mut mg = LinearMixtureMG {
            shape,
            features,
            theta_star,
            reward,
            param_bound,
            kernel: Vec::new(),
        };
        mg.kernel = mg.build_kernel()?;
        mg.validate()?;
        Ok(mg)
    }

    pub fn shape(&self) -> GameShape {
        self.shape
    }
    pub fn num_states(&self) -> usize {
        self.shape.num_states
    }
    pub fn num_actions_max(&self) -> usize {
        self.shape.num_actions_max
    }
    pub fn num_actions_min(&self) -> usize {
        self.shape.num_actions_min
    }
    pub fn horizon(&self) -> usize {
        self.shape.horizon
    }
    pub fn dim(&self) -> usize {
        self.shape.dim
    }
    pub fn param_bound(&self) -> f64 {
        self.param_bound
    }
    pub fn theta_star(&self, h: usize) -> &DVector<f64> {
        &self.theta_star[h]
    }

    #[inline]
    fn triple_index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.shape.num_actions_max + a) * self.shape.num_actions_min + b
    }

    /// `φ(s'|s,a,b)` as a slice of length `d`.
    pub fn feature(&self, s_next: usize, s: usize, a: usize, b: usize) -> &[f64] {
        let d = self.shape.dim;
        let off = (s_next * self.shape.num_triples() + self.triple_index(s, a, b)) * d;
        &self.features[off..off + d]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize, b: usize) -> f64 {
        self.reward[h * self.shape.num_triples() + self.triple_index(s, a, b)]
    }

    /// Rewards of step `h` at state `s` as a row-major `A_max × A_min` slice.
    pub fn reward_matrix(&self, h: usize, s: usize) -> &[f64] {
        let n = self.shape.num_actions_max * self.shape.num_actions_min;
        let off = h * self.shape.num_triples() + self.triple_index(s, 0, 0);
        &self.reward[off..off + n]
    }

    fn check_triple(&self, s: usize, a: usize, b: usize) -> Result<()> {
        if s >= self.shape.num_states || a >= self.shape.num_actions_max || b >= self.shape.num_actions_min {
            return Err(Error::Usage(format!(
                "(s={s}, a={a}, b={b}) out of range for shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }

    /// `φ_V(s,a,b) = Σ_{s'} φ(s'|s,a,b) V(s')`.
    pub fn phi_v(&self, value: &[f64], s: usize, a: usize, b: usize) -> Result<DVector<f64>> {
        self.check_triple(s, a, b)?;
        if value.len() != self.shape.num_states {
            return Err(Error::Usage(format!(
                "value function has {} entries for {} states",
                value.len(),
                self.shape.num_states
            )));
        }
        let mut out = DVector::zeros(self.shape.dim);
        self.phi_v_into(value, s, a, b, out.as_mut_slice());
        Ok(out)
    }

    /// Unchecked accumulation of `φ_V(s,a,b)` into `out` (overwritten).
    pub(crate) fn phi_v_into(&self, value: &[f64], s: usize, a: usize, b: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s_next, &v) in value.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (o, f) in out.iter_mut().zip(self.feature(s_next, s, a, b)) {
                *o += f * v;
            }
        }
    }

    /// `P_h(s'|s,a,b)`, clamped to `[0, 1]` at construction.
    pub fn transition_prob(&self, h: usize, s: usize, a: usize, b: usize, s_next: usize) -> f64 {
        self.transition_row(h, s, a, b)[s_next]
    }

    /// The distribution `P_h(·|s,a,b)`.
    pub fn transition_row(&self, h: usize, s: usize, a: usize, b: usize) -> &[f64] {
        let n = self.shape.num_states;
        let off = (h * self.shape.num_triples() + self.triple_index(s, a, b)) * n;
        &self.kernel[off..off + n]
    }

    /// `[P_h V](s,a,b)` under the true kernel.
    pub fn expected_value(&self, h: usize, s: usize, a: usize, b: usize, value: &[f64]) -> f64 {
        self.transition_row(h, s, a, b)
            .iter()
            .zip(value)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Draws `s' ∼ P_h(·|s,a,b)` by inverse CDF with one uniform draw.
    pub fn sample_next_state<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, b: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        inverse_cdf(self.transition_row(h, s, a, b), u)
    }

    fn build_kernel(&self) -> Result<Vec<f64>> {
        let GameShape {
            num_states: n,
            num_actions_max: na,
            num_actions_min: nb,
            horizon,
            ..
        } = self.shape;
        let mut kernel = vec![0.0; horizon * self.shape.num_triples() * n];
        for h in 0..horizon {
            let theta = self.theta_star[h].as_slice();
            for s in 0..n {
                for a in 0..na {
                    for b in 0..nb {
                        let off = (h * self.shape.num_triples() + self.triple_index(s, a, b)) * n;
                        let row = &mut kernel[off..off + n];
                        let mut sum = 0.0;
                        for (s_next, p) in row.iter_mut().enumerate() {
                            let raw: f64 = self
                                .feature(s_next, s, a, b)
                                .iter()
                                .zip(theta)
                                .map(|(f, t)| f * t)
                                .sum();
                            if !raw.is_finite() {
                                return Err(Error::Validation(format!(
                                    "non-finite transition probability at h={h}, s={s}, a={a}, b={b}, s'={s_next}"
                                )));
                            }
                            if !(-NEGATIVE_PROB_TOL..=1.0 + KERNEL_SUM_TOL).contains(&raw) {
                                return Err(Error::Validation(format!(
                                    "transition probability {raw} outside [0, 1] at h={h}, s={s}, a={a}, b={b}, s'={s_next}"
                                )));
                            }
                            sum += raw;
                            *p = raw.clamp(0.0, 1.0);
                        }
                        if (sum - 1.0).abs() > KERNEL_SUM_TOL {
                            return Err(Error::Validation(format!(
                                "kernel row h={h}, s={s}, a={a}, b={b} sums to {sum}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(kernel)
    }

    /// Checks every instance invariant: kernel validity, reward range,
    /// parameter bound and the `‖φ_V‖₂ ≤ 1` normalization.
    pub fn validate(&self) -> Result<()> {
        if !(self.param_bound.is_finite() && self.param_bound > 0.0) {
            return Err(Error::Validation(format!(
                "parameter bound must be positive, got {}",
                self.param_bound
            )));
        }
        if let Some(f) = self.features.iter().find(|f| !f.is_finite()) {
            return Err(Error::Validation(format!("non-finite feature entry {f}")));
        }
        for (h, theta) in self.theta_star.iter().enumerate() {
            let norm = theta.norm();
            if !norm.is_finite() || norm > self.param_bound * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "‖θ*_{h}‖ = {norm} exceeds bound {}",
                    self.param_bound
                )));
            }
        }
        if let Some(r) = self.reward.iter().find(|r| !(**r >= -1.0 && **r <= 1.0)) {
            return Err(Error::Validation(format!("reward {r} outside [-1, 1]")));
        }
        // recompute: catches instances mutated after construction
        let kernel = self.build_kernel()?;
        debug_assert_eq!(kernel.len(), self.kernel.len());
        self.check_normalization()
    }

    /// `‖φ_V(s,a,b)‖₂ ≤ 1` for all `V ∈ [-1,1]^S`. The norm is convex in `V`,
    /// so its maximum sits on a vertex of the cube. A cheap Gram-matrix bound
    /// settles most instances; otherwise vertices are enumerated (small `S`)
    /// or sampled, together with `V ≡ ±1`.
    fn check_normalization(&self) -> Result<()> {
        let n = self.shape.num_states;
        let d = self.shape.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
        let mut gram = vec![0.0; n * n];
        let mut phi = vec![0.0; d];
        let mut v = vec![0.0; n];
        for s in 0..n {
            for a in 0..self.shape.num_actions_max {
                for b in 0..self.shape.num_actions_min {
                    let mut abs_sum = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            let g: f64 = self
                                .feature(i, s, a, b)
                                .iter()
                                .zip(self.feature(j, s, a, b))
                                .map(|(x, y)| x * y)
                                .sum();
                            gram[i * n + j] = g;
                            abs_sum += g.abs();
                        }
                    }
                    if abs_sum <= (1.0 + NORMALIZATION_TOL).powi(2) {
                        continue;
                    }
                    let mut check = |v: &[f64]| -> Result<()> {
                        self.phi_v_into(v, s, a, b, &mut phi);
                        let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1.0 + NORMALIZATION_TOL {
                            return Err(Error::Validation(format!(
                                "‖φ_V({s},{a},{b})‖₂ = {norm} > 1 for V = {v:?}"
                            )));
                        }
                        Ok(())
                    };
                    if n <= 12 {
                        for mask in 0u32..(1 << n) {
                            for (i, x) in v.iter_mut().enumerate() {
                                *x = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                            }
                            check(&v)?;
                        }
                    } else {
                        v.iter_mut().for_each(|x| *x = 1.0);
                        check(&v)?;
                        v.iter_mut().for_each(|x| *x = -1.0);
                        check(&v)?;
                        for _ in 0..256 {
                            for x in v.iter_mut() {
                                *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            }
                            check(&v)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index drawn by inverse CDF over `probs` with the uniform draw `u ∈ [0,1)`.
/// Falls back to the last index with positive mass when round-off leaves the
/// cumulative sum short of `u`.
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Which player moves at a state of a turn-based game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Max,
    Min,
}

/// A turn-based linear mixture game: one shared action axis, and each state
/// is owned by exactly one player.
#[derive(Clone, Debug)]
pub struct TurnBasedMG {
    model: LinearMixtureMG,
    owners: Vec<Owner>,
}

impl TurnBasedMG {
    /// `model` must have a single min action; its max-action axis is the
    /// shared action axis.
    pub fn new(model: LinearMixtureMG, owners: Vec<Owner>) -> Result<Self> {
        if model.num_actions_min() != 1 {
            return Err(Error::Validation(format!(
                "turn-based model must have one dummy column, got {}",
                model.num_actions_min()
            )));
        }
        if owners.len() != model.num_states() {
            return Err(Error::Validation(format!(
                "{} owner tags for {} states",
                owners.len(),
                model.num_states()
            )));
        }
        Ok(TurnBasedMG { model, owners })
    }

    pub fn model(&self) -> &LinearMixtureMG {
        &self.model
    }
    pub fn owners(&self) -> &[Owner] {
        &self.owners
    }
    pub fn owner(&self, s: usize) -> Owner {
        self.owners[s]
    }
    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }
    pub fn num_actions(&self) -> usize {
        self.model.num_actions_max()
    }
    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()
    }
}

/// One-hot tabular game. `kernels[h]` is `[s][a][b][s']`, `rewards[h]` is
/// `[s][a][b]`.
///
/// Features are one-hot over `(s, a, b, s')` scaled by `1/√S`, parameters are
/// the flattened kernel scaled by `√S`, so `⟨φ, θ*⟩` is unchanged while
/// `‖φ_V‖₂ ≤ 1` holds for every `|V| ≤ 1`.
pub fn make_tabular(kernels: &[Kernel], rewards: &[RewardTable]) -> Result<LinearMixtureMG> {
    let horizon = kernels.len();
    if horizon == 0 || rewards.len() != horizon {
        return Err(Error::Validation(format!(
            "{} kernels and {} reward tables",
            horizon,
            rewards.len()
        )));
    }
    let n = kernels[0].len();
    let na = kernels[0].first().map_or(0, |x| x.len());
    let nb = kernels[0].first().and_then(|x| x.first()).map_or(0, |x| x.len());
    let shape = GameShape {
        num_states: n,
        num_actions_max: na,
        num_actions_min: nb,
        horizon,
        dim: n * n * na * nb,
    };
    shape.check()?;
    let d = shape.dim;
    let ragged = || Error::Validation("ragged kernel or reward table".into());
    let scale = (n as f64).sqrt();

    let mut features = vec![0.0; n * shape.num_triples() * d];
    for s_next in 0..n {
        for s in 0..n {
            for a in 0..na {
                for b in 0..nb {
                    let triple = (s * na + a) * nb + b;
                    let idx = triple * n + s_next;
                    features[(s_next * shape.num_triples() + triple) * d + idx] = 1.0 / scale;
                }
            }
        }
    }

    let mut theta_star = Vec::with_capacity(horizon);
    let mut reward = Vec::with_capacity(horizon * shape.num_triples());
    for (kernel, rtable) in kernels.iter().zip(rewards) {
        if kernel.len() != n || rtable.len() != n {
            return Err(ragged());
        }
        let mut theta = DVector::zeros(d);
        for s in 0..n {
            if kernel[s].len() != na || rtable[s].len() != na {
                return Err(ragged());
            }
            for a in 0..na {
                if kernel[s][a].len() != nb || rtable[s][a].len() != nb {
                    return Err(ragged());
                }
                for b in 0..nb {
                    let row = &kernel[s][a][b];
                    if row.len() != n {
                        return Err(ragged());
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > KERNEL_SUM_TOL || row.iter().any(|p| *p < 0.0) {
                        return Err(Error::Validation(format!(
                            "kernel row (s={s}, a={a}, b={b}) is not a distribution: {row:?}"
                        )));
                    }
                    let triple = (s * na + a) * nb + b;
                    for (s_next, p) in row.iter().enumerate() {
                        theta[triple * n + s_next] = p * scale;
                    }
                    reward.push(rtable[s][a][b]);
                }
            }
        }
        theta_star.push(theta);
    }
    let bound = theta_star.iter().map(|t| t.norm()).fold(0.0, f64::max);
    LinearMixtureMG::new(shape, features, theta_star, reward, bound)
}

/// Embeds a turn-based game as a simultaneous-move game with
/// `A_max = A_min = A`: at max-owned states the min action is ignored, at
/// min-owned states the max action is ignored.
pub fn embed_turn_based(tb: &TurnBasedMG) -> Result<LinearMixtureMG> {
    let m = tb.model();
    let na = tb.num_actions();
    let n = tb.num_states();
    let d = tb.dim();
    let shape = GameShape {
        num_states: n,
        num_actions_max: na,
        num_actions_min: na,
        horizon: tb.horizon(),
        dim: d,
    };
    let acting = |s: usize, a: usize, b: usize| match tb.owner(s) {
        Owner::Max => a,
        Owner::Min => b,
    };
    let mut features = Vec::with_capacity(n * shape.num_triples() * d);
    for s_next in 0..n {
        for s in 0..n {
            for a in 0..na {
                for b in 0..na {
                    features.extend_from_slice(m.feature(s_next, s, acting(s, a, b), 0));
                }
            }
        }
    }
    let mut reward = Vec::with_capacity(shape.horizon * shape.num_triples());
    for h in 0..shape.horizon {
        for s in 0..n {
            for a in 0..na {
                for b in 0..na {
                    reward.push(m.reward(h, s, acting(s, a, b), 0));
                }
            }
        }
    }
    LinearMixtureMG::new(shape, features, m.theta_star.clone(), reward, m.param_bound())
}

/// Number of actions given to the dummy min player.
pub const DUMMY_MIN_ACTIONS: usize = 2;

/// Turns a single-agent MDP (a game with one min action) into a game whose
/// min player has [`DUMMY_MIN_ACTIONS`] actions that affect neither
/// transitions nor rewards.
pub fn make_dummy_min_player(mdp: &LinearMixtureMG) -> Result<LinearMixtureMG> {
    if mdp.num_actions_min() != 1 {
        return Err(Error::Usage(format!(
            "expected a single-agent model (one min action), got {}",
            mdp.num_actions_min()
        )));
    }
    let n = mdp.num_states();
    let na = mdp.num_actions_max();
    let shape = GameShape {
        num_actions_min: DUMMY_MIN_ACTIONS,
        ..mdp.shape()
    };
    let mut features = Vec::with_capacity(n * shape.num_triples() * shape.dim);
    for s_next in 0..n {
        for s in 0..n {
            for a in 0..na {
                for _ in 0..DUMMY_MIN_ACTIONS {
                    features.extend_from_slice(mdp.feature(s_next, s, a, 0));
                }
            }
        }
    }
    let mut reward = Vec::with_capacity(shape.horizon * shape.num_triples());
    for h in 0..shape.horizon {
        for s in 0..n {
            for a in 0..na {
                for _ in 0..DUMMY_MIN_ACTIONS {
                    reward.push(mdp.reward(h, s, a, 0));
                }
            }
        }
    }
    LinearMixtureMG::new(shape, features, mdp.theta_star.clone(), reward, mdp.param_bound())
}

fn dirichlet_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

fn uniform_reward<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// Random linear mixture game: `d` Dirichlet basis kernels `P_i`, simplex
/// weights `θ_h`, features `P_i/√d`, parameters `√d·θ_h`, bound `√d`, and
/// rewards uniform in `[-1, 1]`.
pub fn random_instance<R: Rng + ?Sized>(
    dim: usize,
    num_states: usize,
    num_actions_max: usize,
    num_actions_min: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<LinearMixtureMG> {
    let shape = GameShape {
        num_states,
        num_actions_max,
        num_actions_min,
        horizon,
        dim,
    };
    shape.check()?;
    let n = num_states;
    let triples = shape.num_triples();
    let scale = (dim as f64).sqrt();

    // basis[i][triple] is a distribution over s'
    let basis: Vec<Vec<Vec<f64>>> = (0..dim)
        .map(|_| (0..triples).map(|_| dirichlet_row(n, rng)).collect())
        .collect();
    let mut features = vec![0.0; n * triples * dim];
    for s_next in 0..n {
        for triple in 0..triples {
            for (i, kernel) in basis.iter().enumerate() {
                features[(s_next * triples + triple) * dim + i] = kernel[triple][s_next] / scale;
            }
        }
    }
    let theta_star = (0..horizon)
        .map(|_| DVector::from_vec(dirichlet_row(dim, rng)) * scale)
        .collect();
    let reward = (0..horizon * triples).map(|_| uniform_reward(rng)).collect();
    LinearMixtureMG::new(shape, features, theta_star, reward, scale)
}

/// Random single-agent linear mixture MDP (one min action).
pub fn random_mdp<R: Rng + ?Sized>(
    dim: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<LinearMixtureMG> {
    random_instance(dim, num_states, num_actions, 1, horizon, rng)
}

/// Random turn-based game; ownership is drawn per state, with both players
/// present whenever there are at least two states.
pub fn random_turn_based<R: Rng + ?Sized>(
    dim: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<TurnBasedMG> {
    let model = random_mdp(dim, num_states, num_actions, horizon, rng)?;
    let mut owners: Vec<Owner> = (0..num_states)
        .map(|_| if rng.random::<bool>() { Owner::Max } else { Owner::Min })
        .collect();
    if num_states >= 2 && owners.iter().all(|o| *o == owners[0]) {
        let last = owners.len() - 1;
        owners[last] = match owners[0] {
            Owner::Max => Owner::Min,
            Owner::Min => Owner::Max,
        };
    }
    TurnBasedMG::new(model, owners)
}

/// Random one-hot tabular game with Dirichlet kernel rows.
pub fn random_tabular<R: Rng + ?Sized>(
    num_states: usize,
    num_actions_max: usize,
    num_actions_min: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<LinearMixtureMG> {
    let mut kernels = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let kernel: Kernel = (0..num_states)
            .map(|_| {
                (0..num_actions_max)
                    .map(|_| (0..num_actions_min).map(|_| dirichlet_row(num_states, rng)).collect())
                    .collect()
            })
            .collect();
        let reward: RewardTable = (0..num_states)
            .map(|_| {
                (0..num_actions_max)
                    .map(|_| (0..num_actions_min).map(|_| uniform_reward(rng)).collect())
                    .collect()
            })
            .collect();
        kernels.push(kernel);
        rewards.push(reward);
    }
    make_tabular(&kernels, &rewards)
}

// ---------------------------------------------------------------------------
// JSON documents

/// Simultaneous-move instance document. `actions` is `[A_max, A_min]`,
/// `features` is `[s'][s][a][b][i]`, `reward` is `[h][s][a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub dim: usize,
    pub num_states: usize,
    pub actions: Vec<usize>,
    pub horizon: usize,
    pub features: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    pub theta_star: Vec<Vec<f64>>,
    pub reward: Vec<Vec<Vec<Vec<f64>>>>,
    pub param_bound: f64,
}

/// Turn-based instance document. `actions` is `[A]`, `features` is
/// `[s'][s][a][i]`, `reward` is `[h][s][a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnBasedDocument {
    pub dim: usize,
    pub num_states: usize,
    pub actions: Vec<usize>,
    pub horizon: usize,
    pub owners: Vec<Owner>,
    pub features: Vec<Vec<Vec<Vec<f64>>>>,
    pub theta_star: Vec<Vec<f64>>,
    pub reward: Vec<Vec<Vec<f64>>>,
    pub param_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceDocument {
    LinearMixture(GameDocument),
    TurnBased(TurnBasedDocument),
}

/// An instance of either game family.
#[derive(Clone, Debug)]
pub enum Instance {
    Simultaneous(LinearMixtureMG),
    TurnBased(TurnBasedMG),
}

impl Instance {
    /// The simultaneous-move view (the embedding, for turn-based games).
    pub fn as_simultaneous(&self) -> Result<LinearMixtureMG> {
        match self {
            Instance::Simultaneous(mg) => Ok(mg.clone()),
            Instance::TurnBased(tb) => embed_turn_based(tb),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Simultaneous(mg) => mg.validate(),
            Instance::TurnBased(tb) => tb.validate(),
        }
    }

    pub fn to_document(&self) -> InstanceDocument {
        match self {
            Instance::Simultaneous(mg) => InstanceDocument::LinearMixture(game_document(mg)),
            Instance::TurnBased(tb) => {
                let m = tb.model();
                let g = game_document(m);
                InstanceDocument::TurnBased(TurnBasedDocument {
                    dim: g.dim,
                    num_states: g.num_states,
                    actions: vec![m.num_actions_max()],
                    horizon: g.horizon,
                    owners: tb.owners().to_vec(),
                    features: g
                        .features
                        .into_iter()
                        .map(|by_s| {
                            by_s.into_iter()
                                .map(|by_a| by_a.into_iter().map(|mut by_b| by_b.remove(0)).collect())
                                .collect()
                        })
                        .collect(),
                    theta_star: g.theta_star,
                    reward: g
                        .reward
                        .into_iter()
                        .map(|by_s| {
                            by_s.into_iter()
                                .map(|by_a| by_a.into_iter().map(|by_b| by_b[0]).collect())
                                .collect()
                        })
                        .collect(),
                    param_bound: g.param_bound,
                })
            }
        }
    }

    pub fn from_document(doc: InstanceDocument) -> Result<Self> {
        match doc {
            InstanceDocument::LinearMixture(g) => Ok(Instance::Simultaneous(game_from_document(g)?)),
            InstanceDocument::TurnBased(t) => {
                if t.actions.len() != 1 {
                    return Err(Error::Validation(format!(
                        "turn-based `actions` must have one entry, got {:?}",
                        t.actions
                    )));
                }
                let g = GameDocument {
                    dim: t.dim,
                    num_states: t.num_states,
                    actions: vec![t.actions[0], 1],
                    horizon: t.horizon,
                    features: t
                        .features
                        .into_iter()
                        .map(|by_s| {
                            by_s.into_iter()
                                .map(|by_a| by_a.into_iter().map(|f| vec![f]).collect())
                                .collect()
                        })
                        .collect(),
                    theta_star: t.theta_star,
                    reward: t
                        .reward
                        .into_iter()
                        .map(|by_s| {
                            by_s.into_iter()
                                .map(|by_a| by_a.into_iter().map(|r| vec![r]).collect())
                                .collect()
                        })
                        .collect(),
                    param_bound: t.param_bound,
                };
                Ok(Instance::TurnBased(TurnBasedMG::new(game_from_document(g)?, t.owners)?))
            }
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("instance documents always serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: InstanceDocument =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed instance document: {e}")))?;
        Self::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

fn game_document(mg: &LinearMixtureMG) -> GameDocument {
    let GameShape {
        num_states: n,
        num_actions_max: na,
        num_actions_min: nb,
        horizon,
        dim,
    } = mg.shape();
    let features = (0..n)
        .map(|s_next| {
            (0..n)
                .map(|s| {
                    (0..na)
                        .map(|a| (0..nb).map(|b| mg.feature(s_next, s, a, b).to_vec()).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let reward = (0..horizon)
        .map(|h| {
            (0..n)
                .map(|s| {
                    (0..na)
                        .map(|a| (0..nb).map(|b| mg.reward(h, s, a, b)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    GameDocument {
        dim,
        num_states: n,
        actions: vec![na, nb],
        horizon,
        features,
        theta_star: mg.theta_star.iter().map(|t| t.as_slice().to_vec()).collect(),
        reward,
        param_bound: mg.param_bound(),
    }
}

fn game_from_document(g: GameDocument) -> Result<LinearMixtureMG> {
    if g.actions.len() != 2 {
        return Err(Error::Validation(format!(
            "`actions` must be [A_max, A_min], got {:?}",
            g.actions
        )));
    }
    let shape = GameShape {
        num_states: g.num_states,
        num_actions_max: g.actions[0],
        num_actions_min: g.actions[1],
        horizon: g.horizon,
        dim: g.dim,
    };
    shape.check()?;
    let ragged = |what: &str| Error::Validation(format!("`{what}` does not match the declared shape"));
    let mut features = Vec::with_capacity(shape.num_states * shape.num_triples() * shape.dim);
    if g.features.len() != shape.num_states {
        return Err(ragged("features"));
    }
    for by_s in g.features {
        if by_s.len() != shape.num_states {
            return Err(ragged("features"));
        }
        for by_a in by_s {
            if by_a.len() != shape.num_actions_max {
                return Err(ragged("features"));
            }
            for by_b in by_a {
                if by_b.len() != shape.num_actions_min {
                    return Err(ragged("features"));
                }
                for f in by_b {
                    if f.len() != shape.dim {
                        return Err(ragged("features"));
                    }
                    features.extend(f);
                }
            }
        }
    }
    let mut reward = Vec::with_capacity(shape.horizon * shape.num_triples());
    if g.reward.len() != shape.horizon {
        return Err(ragged("reward"));
    }
    for by_s in g.reward {
        if by_s.len() != shape.num_states {
            return Err(ragged("reward"));
        }
        for by_a in by_s {
            if by_a.len() != shape.num_actions_max {
                return Err(ragged("reward"));
            }
            for by_b in by_a {
                if by_b.len() != shape.num_actions_min {
                    return Err(ragged("reward"));
                }
                reward.extend(by_b);
            }
        }
    }
    let theta_star = g.theta_star.into_iter().map(DVector::from_vec).collect();
    LinearMixtureMG::new(shape, features, theta_star, reward, g.param_bound)
}
