//! Multi-seed experiment execution.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    Algorithm, ExperimentConfig, InstanceKind, InstanceSpec, MAX_ACTIONS, MAX_DIM, MAX_HORIZON, MAX_STATES,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    best_response_value_max, best_response_value_min, confidence_membership, policy_certificate, EventMonitor,
};
use crate::game_model::{
    embed_turn_based, make_dummy_min_player, random_instance, random_mdp, random_tabular, random_turn_based, Instance,
    LinearMixtureMG, TurnBasedMG,
};
use crate::learner::{
    episode_betas, run_episode, run_turn_based_episode, EpisodeRecord, LearnerConfig, RegressionState,
};

/// Slack on the value sandwich checks.
pub const SANDWICH_TOL: f64 = 1e-7;

/// Builds the instance described by `spec`. Random kinds draw everything
/// from a ChaCha8 stream seeded with `spec.seed`.
pub fn build_instance(spec: &InstanceSpec) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = |v: Option<usize>| v.unwrap_or(0);
    let (s, a, b, h, d) = (
        dim(spec.num_states),
        dim(spec.num_actions_max),
        dim(spec.num_actions_min),
        dim(spec.horizon),
        dim(spec.dim),
    );
    let instance = match spec.kind {
        InstanceKind::TabularRandom => Instance::Simultaneous(random_tabular(s, a, b, h, &mut rng)?),
        InstanceKind::LinearRandom => Instance::Simultaneous(random_instance(d, s, a, b, h, &mut rng)?),
        InstanceKind::DummyMdp => Instance::Simultaneous(make_dummy_min_player(&random_mdp(d, s, a, h, &mut rng)?)?),
        InstanceKind::TurnBasedRandom => Instance::TurnBased(random_turn_based(d, s, a, h, &mut rng)?),
        InstanceKind::File => {
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| Error::config("instance.path", "missing"))?;
            Instance::load(path)?
        }
    };
    check_caps(&instance)?;
    Ok(instance)
}

fn check_caps(instance: &Instance) -> Result<()> {
    let shape = match instance {
        Instance::Simultaneous(mg) => mg.shape(),
        Instance::TurnBased(tb) => tb.model().shape(),
    };
    let checks = [
        ("S", shape.num_states, MAX_STATES),
        ("A", shape.num_actions_max, MAX_ACTIONS),
        ("B", shape.num_actions_min, MAX_ACTIONS),
        ("H", shape.horizon, MAX_HORIZON),
        ("d", shape.dim, MAX_DIM),
    ];
    for (key, value, cap) in checks {
        if value > cap {
            return Err(Error::config(
                "instance",
                format!("{key} = {value} exceeds the limit {cap}"),
            ));
        }
    }
    Ok(())
}

/// A validated experiment with its instance built and every default resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    /// Config echo with `lambda`, `epsilon`, `seeds` and `eval_every` filled in.
    pub config: ExperimentConfig,
    pub instance: Instance,
    /// The simultaneous-move game used for evaluation (the embedding for
    /// turn-based instances).
    pub model: LinearMixtureMG,
    pub learner: LearnerConfig,
}

impl Experiment {
    pub fn prepare(mut config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let instance = build_instance(&config.instance)?;
        let model = match &instance {
            Instance::Simultaneous(mg) => mg.clone(),
            Instance::TurnBased(tb) => embed_turn_based(tb)?,
        };
        if config.algorithm == Algorithm::TurnBased && !matches!(instance, Instance::TurnBased(_)) {
            return Err(Error::config("algorithm", "turn-based runs need a turn-based instance"));
        }
        let mut learner = LearnerConfig::new(model.param_bound(), model.horizon(), config.episodes);
        learner.lambda = *config.lambda.get_or_insert(learner.lambda);
        learner.cce_epsilon = *config.epsilon.get_or_insert(learner.cce_epsilon);
        learner.delta = config.delta;
        learner.variance_floor = config.variance_floor;
        learner.beta_constants = config.beta_constants;
        learner.initial_state = config.initial_state.clone();
        learner.radius_scale = config.radius_scale;
        learner
            .validate(model.num_states())
            .map_err(|e| Error::config("initial_state", e.to_string()))?;
        config.seeds = Some(config.run_seeds());
        config.eval_every = Some(config.eval_every());
        Ok(Experiment {
            config,
            instance,
            model,
            learner,
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.config.run_seeds()
    }

    pub fn eval_every(&self) -> usize {
        self.config.eval_every()
    }

    fn turn_based(&self) -> Option<&TurnBasedMG> {
        match (&self.instance, self.config.algorithm) {
            (Instance::TurnBased(tb), Algorithm::TurnBased) => Some(tb),
            _ => None,
        }
    }
}

/// One evaluated episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub episode: usize,
    pub gap: f64,
    /// Running regret; between evaluated episodes each gap stands for the
    /// episodes since the previous evaluation.
    pub cum_regret: f64,
    pub v_up_s1: f64,
    pub v_lo_s1: f64,
    /// The remaining fields are present only when monitoring.
    pub conf_member: Option<bool>,
    pub e1_margin: Option<f64>,
    pub e2_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub episode: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorSummary {
    /// `θ*_h` inside both confidence sets at every `(k, h)`.
    pub membership_all: bool,
    pub membership_episodes: usize,
    pub martingale_margin: f64,
    pub martingale_holds: bool,
    pub variance_margin: f64,
    pub variance_holds: bool,
    /// Counted only while membership has held so far.
    pub offset_checks: usize,
    pub offset_holds: usize,
    pub sandwich_checks: usize,
    pub sandwich_violations: usize,
    pub sandwich_worst: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub episodes: usize,
    pub evaluated: usize,
    pub regret: f64,
    pub mean_gap: f64,
    pub certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitor: Option<MonitorSummary>,
}

/// Rows produced by one run, plus its summary or the error that stopped it.
#[derive(Debug)]
pub struct RunOutput {
    pub run_index: usize,
    pub seed: u64,
    pub rows: Vec<EvalRow>,
    pub summary: Result<RunSummary>,
}

#[derive(Default)]
struct Sandwich {
    checks: usize,
    violations: usize,
    worst: f64,
}

impl Sandwich {
    fn check(&mut self, excess: f64) {
        self.checks += 1;
        if excess > SANDWICH_TOL {
            self.violations += 1;
        }
        self.worst = self.worst.max(excess);
    }
}

/// Runs one seed. Rows evaluated before a failure are kept.
pub fn run_seed(exp: &Experiment, run_index: usize, seed: u64) -> RunOutput {
    let mut rows = Vec::new();
    let summary = run_seed_inner(exp, run_index, seed, &mut rows);
    RunOutput {
        run_index,
        seed,
        rows,
        summary,
    }
}

fn run_seed_inner(exp: &Experiment, run_index: usize, seed: u64, rows: &mut Vec<EvalRow>) -> Result<RunSummary> {
    let model = &exp.model;
    let learner = &exp.learner;
    let (dim, horizon) = (model.dim(), model.horizon());
    let episodes = exp.config.episodes;
    let every = exp.eval_every();
    let monitoring = exp.config.monitor;
    let slack = (horizon as f64 + 1.0) * learner.cce_epsilon;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reg = RegressionState::new(dim, horizon, learner.lambda)?;
    let mut monitor = EventMonitor::new(horizon, learner.delta);
    let mut sandwich = Sandwich::default();
    let mut member_so_far = true;
    let mut member_count = 0;
    let mut cum = 0.0;
    let mut last_eval = 0;

    for k in 1..=episodes {
        let member = if monitoring {
            let betas = episode_betas(learner, k, dim, horizon)?;
            confidence_membership(model, &reg, betas.first)
        } else {
            true
        };
        member_so_far &= member;
        member_count += usize::from(member);

        let rec: EpisodeRecord = match exp.turn_based() {
            Some(tb) => run_turn_based_episode(tb, &mut reg, learner, k, &mut rng)?,
            None => run_episode(model, &mut reg, learner, k, &mut rng)?,
        };
        if monitoring {
            monitor.record(model, &rec, member_so_far)?;
        }

        if k.is_multiple_of(every) || k == episodes {
            let s1 = rec.initial_state;
            let upper = best_response_value_max(model, &rec.tables.min_policy())?
                .values
                .get(0, s1);
            let lower = best_response_value_min(model, &rec.tables.max_policy())?
                .values
                .get(0, s1);
            let gap = upper - lower;
            cum += gap * (k - last_eval) as f64;
            last_eval = k;
            if monitoring && member_so_far {
                sandwich.check(rec.v_lo_initial - slack - lower);
                sandwich.check(lower - upper);
                sandwich.check(upper - rec.v_up_initial - slack);
            }
            rows.push(EvalRow {
                episode: k,
                gap,
                cum_regret: cum,
                v_up_s1: rec.v_up_initial,
                v_lo_s1: rec.v_lo_initial,
                conf_member: monitoring.then_some(member),
                e1_margin: monitoring.then(|| monitor.martingale_margin()),
                e2_margin: monitoring.then(|| monitor.variance_margin()),
            });
        }
    }

    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let (idx, gap) = policy_certificate(&gaps).ok_or_else(|| Error::Invariant("no evaluated episodes".into()))?;
    let (offset_checks, offset_holds) = monitor.offset_counts();
    info!("run {run_index} (seed {seed}): regret {cum:.6}");
    Ok(RunSummary {
        run_index,
        seed,
        episodes,
        evaluated: rows.len(),
        regret: cum,
        mean_gap: cum / episodes as f64,
        certificate: Certificate {
            episode: rows[idx - 1].episode,
            gap,
        },
        monitor: monitoring.then(|| MonitorSummary {
            membership_all: member_so_far,
            membership_episodes: member_count,
            martingale_margin: monitor.martingale_margin(),
            martingale_holds: monitor.martingale_margin() >= 0.0,
            variance_margin: monitor.variance_margin(),
            variance_holds: monitor.variance_margin() >= 0.0,
            offset_checks,
            offset_holds,
            sandwich_checks: sandwich.checks,
            sandwich_violations: sandwich.violations,
            sandwich_worst: sandwich.worst,
        }),
    })
}

/// Runs every seed in parallel; outputs come back in seed order.
pub fn run_all(exp: &Experiment) -> Vec<RunOutput> {
    exp.seeds()
        .into_par_iter()
        .enumerate()
        .map(|(i, seed)| run_seed(exp, i, seed))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventFrequencies {
    pub membership: f64,
    pub martingale: f64,
    pub variance_sum: f64,
    /// Pooled over runs where membership held throughout.
    pub offset: Option<f64>,
    pub sandwich_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub episodes: Vec<usize>,
    pub mean_regret: Vec<f64>,
    pub min_regret: Vec<f64>,
    pub max_regret: Vec<f64>,
    pub final_regret_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<EventFrequencies>,
}

/// Pointwise mean/min/max curves over runs sharing the same evaluation
/// episodes.
pub fn aggregate(runs: &[(Vec<EvalRow>, RunSummary)]) -> Result<Aggregate> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Invariant("no runs to aggregate".into()))?;
    let episodes: Vec<usize> = first.0.iter().map(|r| r.episode).collect();
    if runs
        .iter()
        .any(|(rows, _)| rows.iter().map(|r| r.episode).ne(episodes.iter().copied()))
    {
        return Err(Error::Invariant("runs were evaluated at different episodes".into()));
    }
    let n = runs.len() as f64;
    let column = |i: usize| runs.iter().map(move |(rows, _)| rows[i].cum_regret);
    let mean_regret: Vec<f64> = (0..episodes.len()).map(|i| column(i).sum::<f64>() / n).collect();
    let min_regret = (0..episodes.len())
        .map(|i| column(i).fold(f64::INFINITY, f64::min))
        .collect();
    let max_regret = (0..episodes.len())
        .map(|i| column(i).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let monitors: Vec<&MonitorSummary> = runs.iter().filter_map(|(_, s)| s.monitor.as_ref()).collect();
    let events = (monitors.len() == runs.len()).then(|| {
        let freq = |f: fn(&MonitorSummary) -> bool| monitors.iter().filter(|m| f(m)).count() as f64 / n;
        let covered: Vec<&&MonitorSummary> = monitors.iter().filter(|m| m.membership_all).collect();
        let checks: usize = covered.iter().map(|m| m.offset_checks).sum();
        let holds: usize = covered.iter().map(|m| m.offset_holds).sum();
        EventFrequencies {
            membership: freq(|m| m.membership_all),
            martingale: freq(|m| m.martingale_holds),
            variance_sum: freq(|m| m.variance_holds),
            offset: (checks > 0).then(|| holds as f64 / checks as f64),
            sandwich_violations: monitors.iter().map(|m| m.sandwich_violations).sum(),
        }
    });
    Ok(Aggregate {
        final_regret_mean: mean_regret.last().copied().unwrap_or(0.0),
        episodes,
        mean_regret,
        min_regret,
        max_regret,
        events,
    })
}
