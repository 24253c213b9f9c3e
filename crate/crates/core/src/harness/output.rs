//! CSV and JSON emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{Aggregate, EvalRow, Experiment, RunSummary};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "episode,gap,cum_regret,v_up_s1,v_lo_s1,conf_member,e1_margin,e2_margin";
pub const SUMMARY_FILE: &str = "summary.json";

/// Seventeen significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_name(run_index: usize) -> String {
    format!("run_{run_index:03}.csv")
}

pub fn format_csv(rows: &[EvalRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let member = r.conf_member.map(|m| u8::from(m).to_string()).unwrap_or_default();
        let e1 = r.e1_margin.map(num).unwrap_or_default();
        let e2 = r.e2_margin.map(num).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.episode,
            num(r.gap),
            num(r.cum_regret),
            num(r.v_up_s1),
            num(r.v_lo_s1),
            member,
            e1,
            e2
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_csv(dir: &Path, run_index: usize, rows: &[EvalRow]) -> Result<PathBuf> {
    let path = dir.join(csv_name(run_index));
    write_file(&path, &format_csv(rows))?;
    Ok(path)
}

#[derive(Serialize)]
struct InstanceEcho {
    kind: &'static str,
    #[serde(rename = "S")]
    num_states: usize,
    #[serde(rename = "A")]
    num_actions_max: usize,
    #[serde(rename = "B")]
    num_actions_min: usize,
    #[serde(rename = "H")]
    horizon: usize,
    d: usize,
    param_bound: f64,
}

#[derive(Serialize)]
struct Evaluation {
    eval_every: usize,
    /// How `cum_regret` is accumulated between evaluated episodes.
    cum_regret: &'static str,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    instance: InstanceEcho,
    evaluation: Evaluation,
    runs: &'a [RunSummary],
    aggregate: &'a Aggregate,
}

/// The aggregate JSON document. Contains no timestamps or timings, so equal
/// configs give equal bytes.
pub fn format_summary(exp: &Experiment, runs: &[RunSummary], aggregate: &Aggregate) -> String {
    let shape = exp.model.shape();
    let every = exp.eval_every();
    let doc = SummaryDocument {
        version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        config: &exp.config,
        instance: InstanceEcho {
            kind: match exp.instance {
                crate::game_model::Instance::Simultaneous(_) => "linear-mixture",
                crate::game_model::Instance::TurnBased(_) => "turn-based",
            },
            num_states: shape.num_states,
            num_actions_max: shape.num_actions_max,
            num_actions_min: shape.num_actions_min,
            horizon: shape.horizon,
            d: shape.dim,
            param_bound: exp.model.param_bound(),
        },
        evaluation: Evaluation {
            eval_every: every,
            cum_regret: if every == 1 {
                "exact"
            } else {
                "each evaluated gap counted for every episode since the previous evaluation"
            },
        },
        runs,
        aggregate,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("summary documents always serialize");
    text.push('\n');
    text
}

pub fn write_summary(dir: &Path, exp: &Experiment, runs: &[RunSummary], aggregate: &Aggregate) -> Result<PathBuf> {
    let path = dir.join(SUMMARY_FILE);
    write_file(&path, &format_summary(exp, runs, aggregate))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(episode: usize, gap: f64, cum: f64) -> EvalRow {
        EvalRow {
            episode,
            gap,
            cum_regret: cum,
            v_up_s1: 1.0,
            v_lo_s1: -1.0,
            conf_member: None,
            e1_margin: None,
            e2_margin: None,
        }
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = row(2, 0.5, 0.75);
        r.conf_member = Some(true);
        r.e1_margin = Some(3.0);
        r.e2_margin = Some(4.0);
        let text = format_csv(&[row(1, 0.25, 0.25), r]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "1,2.5000000000000000e-1,2.5000000000000000e-1,1.0000000000000000e0,-1.0000000000000000e0,,,"
        );
        assert!(lines[2].ends_with(",1,3.0000000000000000e0,4.0000000000000000e0"));
        assert_eq!(lines.len(), 3);
    }
}
