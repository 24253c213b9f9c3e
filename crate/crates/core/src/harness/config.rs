//! Experiment configuration documents.
//!
//! ```json
//! {
//!   "instance": {"kind": "tabular-random", "S": 3, "A": 2, "B": 2, "H": 3, "seed": 1},
//!   "K": 100
//! }
//! ```
//!
//! Optional top-level keys: `algorithm`, `delta`, `lambda`, `epsilon`,
//! `seeds`, `num_seeds`, `master_seed`, `monitor`, `eval_every`, `output`,
//! `variance_floor`, `beta_constants`, `initial_state`, `radius_scale`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{BetaConstants, InitialState, VarianceFloor};

pub const MAX_STATES: usize = 64;
pub const MAX_ACTIONS: usize = 8;
pub const MAX_HORIZON: usize = 10;
pub const MAX_DIM: usize = 128;

/// Above this many episodes the default evaluation cadence thins to every
/// `THINNED_EVAL_EVERY`-th episode.
pub const FULL_EVAL_LIMIT: usize = 5000;
pub const THINNED_EVAL_EVERY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    TabularRandom,
    LinearRandom,
    DummyMdp,
    TurnBasedRandom,
    File,
}

impl InstanceKind {
    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::TabularRandom => "tabular-random",
            InstanceKind::LinearRandom => "linear-random",
            InstanceKind::DummyMdp => "dummy-mdp",
            InstanceKind::TurnBasedRandom => "turn-based-random",
            InstanceKind::File => "file",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub num_states: Option<usize>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub num_actions_max: Option<usize>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub num_actions_min: Option<usize>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(rename = "d", default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Simultaneous,
    TurnBased,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub episodes: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Defaults to `1/B²` once the instance is built.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Defaults to `√(H/K)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Explicit run seeds. When absent, `num_seeds` seeds are derived from
    /// `master_seed`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_num_seeds")]
    pub num_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Track confidence membership, the martingale and total-variance
    /// events, the variance offsets and the value sandwich.
    #[serde(default)]
    pub monitor: bool,
    /// Defaults to 1 for `K ≤ 5000`, else 10.
    #[serde(default)]
    pub eval_every: Option<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub variance_floor: VarianceFloor,
    #[serde(default)]
    pub beta_constants: BetaConstants,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default = "default_radius_scale")]
    pub radius_scale: f64,
}

fn default_delta() -> f64 {
    0.05
}

fn default_num_seeds() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_radius_scale() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// A config with every optional key at its default.
    pub fn new(instance: InstanceSpec, episodes: usize) -> Self {
        ExperimentConfig {
            instance,
            algorithm: Algorithm::default(),
            episodes,
            delta: default_delta(),
            lambda: None,
            epsilon: None,
            seeds: None,
            num_seeds: default_num_seeds(),
            master_seed: 0,
            monitor: false,
            eval_every: None,
            output: default_output(),
            variance_floor: VarianceFloor::default(),
            beta_constants: BetaConstants::default(),
            initial_state: InitialState::default(),
            radius_scale: default_radius_scale(),
        }
    }

    /// Checks everything that does not need the built instance.
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::config("K", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::config("lambda", format!("must be positive, got {l}")));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::config("epsilon", format!("must be nonnegative, got {e}")));
            }
        }
        match &self.seeds {
            Some(s) if s.is_empty() => return Err(Error::config("seeds", "must not be empty")),
            None if self.num_seeds == 0 => return Err(Error::config("num_seeds", "must be at least 1")),
            _ => {}
        }
        if self.eval_every == Some(0) {
            return Err(Error::config("eval_every", "must be at least 1"));
        }
        if !(self.radius_scale.is_finite() && self.radius_scale >= 0.0) {
            return Err(Error::config(
                "radius_scale",
                format!("must be nonnegative, got {}", self.radius_scale),
            ));
        }
        self.instance.validate()
    }

    pub fn eval_every(&self) -> usize {
        self.eval_every.unwrap_or(if self.episodes <= FULL_EVAL_LIMIT {
            1
        } else {
            THINNED_EVAL_EVERY
        })
    }

    /// Explicit seeds, or `num_seeds` seeds derived from `master_seed`.
    pub fn run_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.num_seeds)
                .map(|i| derive_seed(self.master_seed, i as u64))
                .collect(),
        }
    }
}

impl InstanceSpec {
    /// Which dimension keys each kind requires; all others must be absent.
    fn required(&self) -> [bool; 5] {
        // S, A, B, H, d
        match self.kind {
            InstanceKind::TabularRandom => [true, true, true, true, false],
            InstanceKind::LinearRandom => [true, true, true, true, true],
            InstanceKind::DummyMdp | InstanceKind::TurnBasedRandom => [true, true, false, true, true],
            InstanceKind::File => [false; 5],
        }
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("S", self.num_states, MAX_STATES),
            ("A", self.num_actions_max, MAX_ACTIONS),
            ("B", self.num_actions_min, MAX_ACTIONS),
            ("H", self.horizon, MAX_HORIZON),
            ("d", self.dim, MAX_DIM),
        ];
        for ((key, value, cap), needed) in fields.into_iter().zip(self.required()) {
            let path = format!("instance.{key}");
            match (value, needed) {
                (None, true) => return Err(Error::config(path, format!("required for kind `{}`", self.kind.name()))),
                (Some(_), false) => {
                    return Err(Error::config(path, format!("not used by kind `{}`", self.kind.name())))
                }
                (Some(0), true) => return Err(Error::config(path, "must be at least 1")),
                (Some(v), true) if v > cap => return Err(Error::config(path, format!("{v} exceeds the limit {cap}"))),
                _ => {}
            }
        }
        match (self.kind, &self.path) {
            (InstanceKind::File, None) => Err(Error::config("instance.path", "required for kind `file`")),
            (InstanceKind::File, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::config(
                "instance.path",
                format!("not used by kind `{}`", self.kind.name()),
            )),
            (InstanceKind::TabularRandom, None) => {
                let d = self.num_states.unwrap_or(0).pow(2)
                    * self.num_actions_max.unwrap_or(0)
                    * self.num_actions_min.unwrap_or(0);
                if d > MAX_DIM {
                    Err(Error::config(
                        "instance",
                        format!("tabular feature dimension S²AB = {d} exceeds the limit {MAX_DIM}"),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// SplitMix64 output for stream `index` of `master`: the state is
/// `master + (index + 1)·γ` with the usual golden-ratio increment, so adding
/// runs never changes the seeds of existing ones.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parses and validates a JSON experiment document. Schema violations carry
/// the path of the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"instance":{"kind":"tabular-random","S":3,"A":2,"B":2,"H":3,"seed":1},"K":100}"#;

    fn config_path(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.episodes, 100);
        assert_eq!(c.delta, 0.05);
        assert_eq!(c.lambda, None);
        assert_eq!(c.algorithm, Algorithm::Simultaneous);
        assert_eq!(c.eval_every(), 1);
        assert_eq!(c.run_seeds().len(), 1);
        assert_eq!(c.radius_scale, 1.0);
    }

    #[test]
    fn zero_episodes_rejected() {
        let text = MINIMAL.replace("\"K\":100", "\"K\":0");
        assert_eq!(config_path(&text), "K");
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let text = MINIMAL.replace("\"seed\":1", "\"seed\":1,\"colour\":2");
        assert!(config_path(&text).starts_with("instance"));
        let text = MINIMAL.replace("\"K\":100", "\"K\":100,\"extra\":true");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn wrong_type_reports_path() {
        let text = MINIMAL.replace("\"S\":3", "\"S\":\"three\"");
        assert_eq!(config_path(&text), "instance.S");
    }

    #[test]
    fn dimension_rules() {
        let missing = MINIMAL.replace("\"B\":2,", "");
        assert_eq!(config_path(&missing), "instance.B");
        let extra = MINIMAL.replace("\"H\":3", "\"H\":3,\"d\":4");
        assert_eq!(config_path(&extra), "instance.d");
        let big = MINIMAL.replace("\"H\":3", "\"H\":11");
        assert_eq!(config_path(&big), "instance.H");
        let wide = MINIMAL.replace("\"S\":3", "\"S\":6");
        assert_eq!(config_path(&wide), "instance");
        let file = r#"{"instance":{"kind":"file"},"K":1}"#;
        assert_eq!(config_path(file), "instance.path");
    }

    #[test]
    fn cadence_thins_for_long_runs() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.episodes = 5000;
        assert_eq!(c.eval_every(), 1);
        c.episodes = 5001;
        assert_eq!(c.eval_every(), 10);
        c.eval_every = Some(3);
        assert_eq!(c.eval_every(), 3);
    }

    #[test]
    fn derived_seeds_are_prefix_stable() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.num_seeds = 3;
        let three = c.run_seeds();
        c.num_seeds = 5;
        let five = c.run_seeds();
        assert_eq!(three[..], five[..3]);
        assert_eq!(five.len(), 5);
        let mut dedup = five.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 5);
    }

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of the SplitMix64 generator seeded with 0.
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn learner_options_parse() {
        let text = MINIMAL.replace(
            "\"K\":100",
            "\"K\":100,\"variance_floor\":\"quarter\",\"beta_constants\":\"conservative\",\"initial_state\":{\"fixed\":2}",
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.variance_floor, VarianceFloor::Quarter);
        assert_eq!(c.beta_constants, BetaConstants::Conservative);
        assert_eq!(c.initial_state, InitialState::Fixed(2));
    }

    #[test]
    fn serializes_back_to_itself() {
        let c = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
