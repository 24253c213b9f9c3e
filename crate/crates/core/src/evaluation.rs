//! Exact evaluation against the true model: policy values, best responses,
//! Nash values, per-episode duality gaps and event monitors.
//!
//! Everything here reads the true kernel and is never consulted by the
//! learner itself.

use nalgebra::DVector;

use crate::equilibrium::{zero_sum_value, JointDistribution, PayoffMatrix, ZeroSumSolution};
use crate::error::{Error, Result};
use crate::game_model::LinearMixtureMG;
use crate::learner::{EpisodeRecord, Side, SideStats};

/// A Markov policy over one player's actions, `[h][s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovPolicy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl MarkovPolicy {
    pub fn from_flat(horizon: usize, num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != horizon * num_states * num_actions || num_actions == 0 {
            return Err(Error::Usage(format!(
                "policy table of {} entries for H={horizon}, S={num_states}, A={num_actions}",
                probs.len()
            )));
        }
        for (i, row) in probs.chunks(num_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= -1e-12)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Numeric(format!(
                    "policy row (h={}, s={}) is not a distribution: {row:?}",
                    i / num_states,
                    i % num_states
                )));
            }
        }
        Ok(MarkovPolicy {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        MarkovPolicy {
            horizon,
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; horizon * num_states * num_actions],
        }
    }

    /// `choices[h * S + s]` is the action taken surely.
    pub fn deterministic(horizon: usize, num_states: usize, num_actions: usize, choices: &[usize]) -> Self {
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for (i, &a) in choices.iter().enumerate() {
            probs[i * num_actions + a] = 1.0;
        }
        MarkovPolicy {
            horizon,
            num_states,
            num_actions,
            probs,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, h: usize, s: usize) -> &[f64] {
        let off = (h * self.num_states + s) * self.num_actions;
        &self.probs[off..off + self.num_actions]
    }
}

/// Values over `(h, s)` with `h ∈ 0..=H` and row `H` zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    num_states: usize,
    values: Vec<f64>,
}

impl ValueTable {
    fn zeros(horizon: usize, num_states: usize) -> Self {
        ValueTable {
            num_states,
            values: vec![0.0; (horizon + 1) * num_states],
        }
    }

    pub fn get(&self, h: usize, s: usize) -> f64 {
        self.values[h * self.num_states + s]
    }

    pub fn row(&self, h: usize) -> &[f64] {
        &self.values[h * self.num_states..(h + 1) * self.num_states]
    }

    fn set(&mut self, h: usize, s: usize, v: f64) {
        self.values[h * self.num_states + s] = v;
    }
}

/// State values together with the matching action values `[h][s][a][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunctions {
    pub values: ValueTable,
    q: Vec<f64>,
    block: usize,
}

impl ValueFunctions {
    /// `Q_h(s,·,·)` row-major.
    pub fn q(&self, h: usize, s: usize) -> &[f64] {
        let off = (h * self.values.num_states + s) * self.block;
        &self.q[off..off + self.block]
    }
}

/// Backward induction where `state_value(h, s, q)` turns the row-major
/// `Q_h(s,·,·)` into `V_h(s)`.
fn backward<F>(mg: &LinearMixtureMG, mut state_value: F) -> Result<ValueFunctions>
where
    F: FnMut(usize, usize, &[f64]) -> Result<f64>,
{
    let (n, na, nb, horizon) = (
        mg.num_states(),
        mg.num_actions_max(),
        mg.num_actions_min(),
        mg.horizon(),
    );
    let block = na * nb;
    let mut values = ValueTable::zeros(horizon, n);
    let mut q = vec![0.0; horizon * n * block];
    for h in (0..horizon).rev() {
        let next = values.row(h + 1).to_vec();
        for s in 0..n {
            let off = (h * n + s) * block;
            for a in 0..na {
                for b in 0..nb {
                    q[off + a * nb + b] = mg.reward(h, s, a, b) + mg.expected_value(h, s, a, b, &next);
                }
            }
            let v = state_value(h, s, &q[off..off + block])?;
            values.set(h, s, v);
        }
    }
    Ok(ValueFunctions { values, q, block })
}

fn check_policy(mg: &LinearMixtureMG, policy: &MarkovPolicy, actions: usize) -> Result<()> {
    if policy.horizon != mg.horizon() || policy.num_states != mg.num_states() || policy.num_actions != actions {
        return Err(Error::Usage("policy shape does not match the game".into()));
    }
    Ok(())
}

/// `V^{*,ν}`: the max player best-responds to the fixed min policy `ν`.
pub fn best_response_value_max(mg: &LinearMixtureMG, nu: &MarkovPolicy) -> Result<ValueFunctions> {
    check_policy(mg, nu, mg.num_actions_min())?;
    let nb = mg.num_actions_min();
    backward(mg, |h, s, q| {
        let col = nu.get(h, s);
        Ok(q.chunks(nb)
            .map(|row| row.iter().zip(col).map(|(v, p)| v * p).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max))
    })
}

/// `V^{π,*}`: the min player best-responds to the fixed max policy `π`.
pub fn best_response_value_min(mg: &LinearMixtureMG, pi: &MarkovPolicy) -> Result<ValueFunctions> {
    check_policy(mg, pi, mg.num_actions_max())?;
    let nb = mg.num_actions_min();
    backward(mg, |h, s, q| {
        let row = pi.get(h, s);
        Ok((0..nb)
            .map(|b| row.iter().enumerate().map(|(a, p)| p * q[a * nb + b]).sum::<f64>())
            .fold(f64::INFINITY, f64::min))
    })
}

/// `V^{π,ν}` for independent Markov policies.
pub fn policy_value(mg: &LinearMixtureMG, pi: &MarkovPolicy, nu: &MarkovPolicy) -> Result<ValueFunctions> {
    check_policy(mg, pi, mg.num_actions_max())?;
    check_policy(mg, nu, mg.num_actions_min())?;
    let nb = mg.num_actions_min();
    backward(mg, |h, s, q| {
        let (row, col) = (pi.get(h, s), nu.get(h, s));
        Ok(q.iter().enumerate().map(|(i, v)| row[i / nb] * col[i % nb] * v).sum())
    })
}

/// `V^μ` of a correlated Markov policy; `joint[h * S + s]` is `μ_h(·,·|s)`.
pub fn joint_policy_value(mg: &LinearMixtureMG, joint: &[JointDistribution]) -> Result<ValueFunctions> {
    if joint.len() != mg.horizon() * mg.num_states() {
        return Err(Error::Usage("joint policy shape does not match the game".into()));
    }
    let n = mg.num_states();
    backward(mg, |h, s, q| Ok(joint[h * n + s].expectation(q)))
}

#[derive(Clone, Debug)]
pub struct NashSolution {
    pub values: ValueTable,
    /// Matrix-game solutions indexed `h * S + s`.
    pub strategies: Vec<ZeroSumSolution>,
}

impl NashSolution {
    pub fn max_policy(&self, horizon: usize, num_states: usize) -> MarkovPolicy {
        let probs: Vec<f64> = self.strategies.iter().flat_map(|z| z.row_strategy.clone()).collect();
        let na = probs.len() / (horizon * num_states);
        MarkovPolicy::from_flat(horizon, num_states, na, probs).expect("solver strategies are distributions")
    }

    pub fn min_policy(&self, horizon: usize, num_states: usize) -> MarkovPolicy {
        let probs: Vec<f64> = self.strategies.iter().flat_map(|z| z.col_strategy.clone()).collect();
        let nb = probs.len() / (horizon * num_states);
        MarkovPolicy::from_flat(horizon, num_states, nb, probs).expect("solver strategies are distributions")
    }
}

/// `V*` by backward induction with a zero-sum matrix game at every `(h, s)`.
pub fn nash_value(mg: &LinearMixtureMG) -> Result<NashSolution> {
    let (na, nb) = (mg.num_actions_max(), mg.num_actions_min());
    let mut solved: Vec<(usize, usize, ZeroSumSolution)> = Vec::new();
    let vf = backward(mg, |h, s, q| {
        let sol = zero_sum_value(&PayoffMatrix::new(na, nb, q.to_vec())?)?;
        let v = sol.value;
        solved.push((h, s, sol));
        Ok(v)
    })?;
    let n = mg.num_states();
    solved.sort_by_key(|(h, s, _)| h * n + s);
    Ok(NashSolution {
        values: vf.values,
        strategies: solved.into_iter().map(|(_, _, z)| z).collect(),
    })
}

/// `V_1^{*,ν}(s_1) − V_1^{π,*}(s_1)`.
pub fn episode_gap(mg: &LinearMixtureMG, pi: &MarkovPolicy, nu: &MarkovPolicy, s1: usize) -> Result<f64> {
    let upper = best_response_value_max(mg, nu)?;
    let lower = best_response_value_min(mg, pi)?;
    Ok(upper.values.get(0, s1) - lower.values.get(0, s1))
}

/// `[𝕍_h V](s,a,b) = [P_h V²](s,a,b) − ([P_h V](s,a,b))²`, floored at zero.
pub fn true_variance(mg: &LinearMixtureMG, h: usize, s: usize, a: usize, b: usize, value: &[f64]) -> f64 {
    let row = mg.transition_row(h, s, a, b);
    let mean: f64 = row.iter().zip(value).map(|(p, v)| p * v).sum();
    let second: f64 = row.iter().zip(value).map(|(p, v)| p * v * v).sum();
    (second - mean * mean).max(0.0)
}

/// `(θ* − θ̂)ᵀ Σ⁽⁰⁾ (θ* − θ̂)` for one side's statistics, to be compared with
/// `β²`.
pub fn confidence_distance(theta_star: &DVector<f64>, stats: &SideStats) -> f64 {
    let diff = theta_star - &stats.theta0;
    diff.dot(&(stats.cov0.matrix() * &diff))
}

/// Whether `θ*_h` lies in both first-moment confidence ellipsoids of radius
/// `beta` at every step.
pub fn confidence_membership(mg: &LinearMixtureMG, reg: &crate::learner::RegressionState, beta: f64) -> bool {
    (0..mg.horizon()).all(|h| {
        [Side::Max, Side::Min]
            .iter()
            .all(|&side| confidence_distance(mg.theta_star(h), reg.side(side, h)) <= beta * beta)
    })
}

/// Right-hand side of the martingale event: `8H√(2T log(H/δ))`.
pub fn martingale_bound(horizon: usize, steps: usize, delta: f64) -> f64 {
    let h = horizon as f64;
    8.0 * h * (2.0 * steps as f64 * (h / delta).ln()).sqrt()
}

/// Right-hand side of the total-variance event: `3(HT + H³ log(1/δ))`.
pub fn variance_sum_bound(horizon: usize, steps: usize, delta: f64) -> f64 {
    let h = horizon as f64;
    3.0 * (h * steps as f64 + h.powi(3) * (1.0 / delta).ln())
}

/// Streaming accumulator for the martingale and total-variance events and
/// the variance-offset check, fed one episode at a time.
#[derive(Clone, Debug)]
pub struct EventMonitor {
    horizon: usize,
    delta: f64,
    // partial sums over h ≥ h' for every h'
    martingale: Vec<f64>,
    variance_sum: f64,
    steps: usize,
    offset_checks: usize,
    offset_holds: usize,
}

impl EventMonitor {
    pub fn new(horizon: usize, delta: f64) -> Self {
        EventMonitor {
            horizon,
            delta,
            martingale: vec![0.0; horizon],
            variance_sum: 0.0,
            steps: 0,
            offset_checks: 0,
            offset_holds: 0,
        }
    }

    /// Adds one episode. The variance-offset check is only counted when
    /// `count_offsets` is set (typically: θ* was inside the confidence sets).
    pub fn record(&mut self, mg: &LinearMixtureMG, rec: &EpisodeRecord, count_offsets: bool) -> Result<()> {
        let t = &rec.tables;
        let mixed = joint_policy_value(mg, t.joint_policy())?;
        for step in &rec.steps {
            let h = step.h;
            let (s, a, b) = (step.state, step.action_max, step.action_min);
            let width: Vec<f64> = t.v_up(h + 1).iter().zip(t.v_lo(h + 1)).map(|(u, l)| u - l).collect();
            let term = mg.expected_value(h, s, a, b, &width) - width[step.next_state];
            for m in &mut self.martingale[..=h] {
                *m += term;
            }
            self.variance_sum += true_variance(mg, h, s, a, b, mixed.values.row(h + 1));
            if count_offsets {
                for side in [Side::Max, Side::Min] {
                    let st = step.side(side);
                    let truth = true_variance(mg, h, s, a, b, &st.v_next);
                    self.offset_checks += 1;
                    if (st.var_est - truth).abs() <= st.offset + 1e-9 {
                        self.offset_holds += 1;
                    }
                }
            }
        }
        self.steps += rec.steps.len();
        Ok(())
    }

    /// Largest partial martingale sum over starting steps `h'`.
    pub fn martingale_max(&self) -> f64 {
        self.martingale.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bound minus largest partial sum; nonnegative when the event holds.
    pub fn martingale_margin(&self) -> f64 {
        martingale_bound(self.horizon, self.steps, self.delta) - self.martingale_max()
    }

    pub fn variance_sum(&self) -> f64 {
        self.variance_sum
    }

    /// Bound minus the accumulated variance; nonnegative when the event holds.
    pub fn variance_margin(&self) -> f64 {
        variance_sum_bound(self.horizon, self.steps, self.delta) - self.variance_sum
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `(checked, held)` counts of `|var_est − 𝕍V| ≤ E`.
    pub fn offset_counts(&self) -> (usize, usize) {
        (self.offset_checks, self.offset_holds)
    }
}

/// Per-episode gaps and their running sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretLedger {
    gaps: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RegretLedger {
    pub fn push(&mut self, gap: f64) {
        let total = self.total() + gap;
        self.gaps.push(gap);
        self.cumulative.push(total);
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// The episode (1-based) with the smallest gap, lowest index on ties, and
/// that gap.
pub fn policy_certificate(gaps: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &g) in gaps.iter().enumerate() {
        if best.is_none_or(|(_, b)| g < b) {
            best = Some((i + 1, g));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{make_tabular, random_instance, random_tabular, Kernel, RewardTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_state(rewards: Vec<Vec<f64>>) -> LinearMixtureMG {
        let na = rewards.len();
        let nb = rewards[0].len();
        let kernel: Kernel = vec![vec![vec![vec![1.0]; nb]; na]];
        let reward: RewardTable = vec![rewards];
        make_tabular(&[kernel], &[reward]).unwrap()
    }

    fn random_policy<R: Rng>(h: usize, s: usize, a: usize, rng: &mut R) -> MarkovPolicy {
        let probs: Vec<f64> = (0..h * s)
            .flat_map(|_| {
                let w: Vec<f64> = (0..a).map(|_| rng.random_range(0.01..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(move |x| x / t)
            })
            .collect();
        MarkovPolicy::from_flat(h, s, a, probs).unwrap()
    }

    /// Recursive evaluation of a product policy, independent of the table DP.
    fn value_by_recursion(mg: &LinearMixtureMG, pi: &MarkovPolicy, nu: &MarkovPolicy, h: usize, s: usize) -> f64 {
        if h == mg.horizon() {
            return 0.0;
        }
        let mut total = 0.0;
        for a in 0..mg.num_actions_max() {
            for b in 0..mg.num_actions_min() {
                let p = pi.get(h, s)[a] * nu.get(h, s)[b];
                if p == 0.0 {
                    continue;
                }
                let mut cont = 0.0;
                for s2 in 0..mg.num_states() {
                    let q = mg.transition_prob(h, s, a, b, s2);
                    if q > 0.0 {
                        cont += q * value_by_recursion(mg, pi, nu, h + 1, s2);
                    }
                }
                total += p * (mg.reward(h, s, a, b) + cont);
            }
        }
        total
    }

    fn all_deterministic(h: usize, s: usize, a: usize) -> Vec<MarkovPolicy> {
        let slots = h * s;
        let count = a.pow(slots as u32);
        (0..count)
            .map(|mut code| {
                let choices: Vec<usize> = (0..slots)
                    .map(|_| {
                        let c = code % a;
                        code /= a;
                        c
                    })
                    .collect();
                MarkovPolicy::deterministic(h, s, a, &choices)
            })
            .collect()
    }

    #[test]
    fn best_response_one_state_examples() {
        let mg = one_state(vec![vec![1.0, -1.0], vec![0.0, 0.0]]);
        let nu = MarkovPolicy::uniform(1, 1, 2);
        assert_eq!(best_response_value_max(&mg, &nu).unwrap().values.get(0, 0), 0.0);
        let pi = MarkovPolicy::deterministic(1, 1, 2, &[0]);
        assert_eq!(best_response_value_min(&mg, &pi).unwrap().values.get(0, 0), -1.0);
    }

    #[test]
    fn constant_reward_values() {
        let kernel: Kernel = vec![vec![vec![vec![0.5, 0.5]; 2]; 2]; 2];
        let reward: RewardTable = vec![vec![vec![0.25; 2]; 2]; 2];
        let mg = make_tabular(
            &[kernel.clone(), kernel.clone(), kernel],
            &[reward.clone(), reward.clone(), reward],
        )
        .unwrap();
        let pi = MarkovPolicy::deterministic(3, 2, 2, &[1, 0, 1, 0, 1, 1]);
        for s in 0..2 {
            assert!((best_response_value_min(&mg, &pi).unwrap().values.get(0, s) - 0.75).abs() < 1e-15);
            assert!((nash_value(&mg).unwrap().values.get(0, s) - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_pennies_nash() {
        let mg = one_state(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(nash_value(&mg).unwrap().values.get(0, 0).abs() < 1e-12);
    }

    #[test]
    fn best_responses_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let mg = random_tabular(2, 2, 2, 2, &mut rng).unwrap();
            let pi = random_policy(2, 2, 2, &mut rng);
            let nu = random_policy(2, 2, 2, &mut rng);
            let br_max = best_response_value_max(&mg, &nu).unwrap();
            let br_min = best_response_value_min(&mg, &pi).unwrap();
            for s in 0..2 {
                let best = all_deterministic(2, 2, 2)
                    .iter()
                    .map(|p| value_by_recursion(&mg, p, &nu, 0, s))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((br_max.values.get(0, s) - best).abs() < 1e-12);
                let worst = all_deterministic(2, 2, 2)
                    .iter()
                    .map(|q| value_by_recursion(&mg, &pi, q, 0, s))
                    .fold(f64::INFINITY, f64::min);
                assert!((br_min.values.get(0, s) - worst).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_opponent_reduces_to_mdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mg = random_instance(2, 3, 2, 3, 2, &mut rng).unwrap();
        let choices = [2, 0, 1, 1, 2, 0];
        let nu = MarkovPolicy::deterministic(2, 3, 3, &choices);
        let br = best_response_value_max(&mg, &nu).unwrap();
        // single-agent value iteration with b fixed
        let mut v = vec![0.0; 3];
        for h in (0..2).rev() {
            v = (0..3)
                .map(|s| {
                    let b = choices[h * 3 + s];
                    (0..2)
                        .map(|a| mg.reward(h, s, a, b) + mg.expected_value(h, s, a, b, &v))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
        }
        for (s, expected) in v.iter().enumerate() {
            assert!((br.values.get(0, s) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_duality_and_bellman_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mg = random_instance(3, 3, 3, 2, 3, &mut rng).unwrap();
        let nash = nash_value(&mg).unwrap();
        for _ in 0..20 {
            let pi = random_policy(3, 3, 3, &mut rng);
            let nu = random_policy(3, 3, 2, &mut rng);
            let up = best_response_value_max(&mg, &nu).unwrap();
            let lo = best_response_value_min(&mg, &pi).unwrap();
            for s in 0..3 {
                assert!(up.values.get(0, s) >= nash.values.get(0, s) - 1e-9);
                assert!(nash.values.get(0, s) >= lo.values.get(0, s) - 1e-9);
            }
            let both = policy_value(&mg, &pi, &nu).unwrap();
            for h in 0..3 {
                for s in 0..3 {
                    assert!(both.values.get(h, s).abs() <= 3.0);
                    let q = both.q(h, s);
                    for a in 0..3 {
                        for b in 0..2 {
                            let want = mg.reward(h, s, a, b) + mg.expected_value(h, s, a, b, both.values.row(h + 1));
                            assert!((q[a * 2 + b] - want).abs() < 1e-10);
                        }
                    }
                    let recursion = value_by_recursion(&mg, &pi, &nu, h, s);
                    assert!((both.values.get(h, s) - recursion).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn nash_strategies_have_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mg = random_instance(2, 3, 3, 3, 3, &mut rng).unwrap();
        let nash = nash_value(&mg).unwrap();
        let pi = nash.max_policy(3, 3);
        let nu = nash.min_policy(3, 3);
        for s in 0..3 {
            assert!(episode_gap(&mg, &pi, &nu, s).unwrap().abs() < 1e-9);
        }
        let pi = random_policy(3, 3, 3, &mut rng);
        let nu = random_policy(3, 3, 3, &mut rng);
        assert!(episode_gap(&mg, &pi, &nu, 0).unwrap() >= -1e-9);
    }

    #[test]
    fn variance_examples() {
        let kernel: Kernel = vec![vec![vec![vec![0.5, 0.5]]], vec![vec![vec![0.0, 1.0]]]];
        let reward: RewardTable = vec![vec![vec![0.0]], vec![vec![0.0]]];
        let mg = make_tabular(&[kernel], &[reward]).unwrap();
        let h = 3.0;
        assert!((true_variance(&mg, 0, 0, 0, 0, &[0.0, h]) - h * h / 4.0).abs() < 1e-12);
        assert_eq!(true_variance(&mg, 0, 1, 0, 0, &[0.0, h]), 0.0);
        assert_eq!(true_variance(&mg, 0, 0, 0, 0, &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn variance_two_ways_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mg = random_instance(3, 5, 2, 2, 1, &mut rng).unwrap();
        for _ in 0..50 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (s, a, b) = (rng.random_range(0..5), rng.random_range(0..2), rng.random_range(0..2));
            let row = mg.transition_row(0, s, a, b);
            let mean: f64 = row.iter().zip(&v).map(|(p, x)| p * x).sum();
            let centered: f64 = row.iter().zip(&v).map(|(p, x)| p * (x - mean).powi(2)).sum();
            assert!((true_variance(&mg, 0, s, a, b, &v) - centered).abs() < 1e-9);
        }
    }

    #[test]
    fn certificate_picks_smallest_gap() {
        assert_eq!(policy_certificate(&[0.4]), Some((1, 0.4)));
        assert_eq!(policy_certificate(&[0.9, 0.5, 0.2, 0.1]), Some((4, 0.1)));
        assert_eq!(policy_certificate(&[0.3, 0.1, 0.1]), Some((2, 0.1)));
        assert_eq!(policy_certificate(&[]), None);
        let gaps = [0.5, 0.2, 0.7, 0.3];
        let mean = gaps.iter().sum::<f64>() / 4.0;
        assert!(policy_certificate(&gaps).unwrap().1 <= mean);
    }

    #[test]
    fn ledger_prefix_sums() {
        let mut ledger = RegretLedger::default();
        for g in [0.5, 0.25, 0.0, 1.0] {
            ledger.push(g);
        }
        assert_eq!(ledger.cumulative(), &[0.5, 0.75, 0.75, 1.75]);
        assert_eq!(ledger.total(), 1.75);
    }

    #[test]
    fn bounds_formulas() {
        assert!((martingale_bound(2, 8, 0.5) - 16.0 * (16.0 * 4f64.ln()).sqrt()).abs() < 1e-12);
        assert!((variance_sum_bound(2, 8, 0.5) - 3.0 * (16.0 + 8.0 * 2f64.ln())).abs() < 1e-12);
    }
}
