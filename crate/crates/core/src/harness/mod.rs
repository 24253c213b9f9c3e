//! Experiment orchestration: config parsing, instance generation, multi-seed
//! runs, aggregation and CSV/JSON output.

mod config;
mod output;
mod run;

pub use config::{
    derive_seed, parse_config, Algorithm, ExperimentConfig, InstanceKind, InstanceSpec, FULL_EVAL_LIMIT, MAX_ACTIONS,
    MAX_DIM, MAX_HORIZON, MAX_STATES, THINNED_EVAL_EVERY,
};
pub use output::{csv_name, format_csv, format_summary, write_csv, write_summary, CSV_HEADER, SUMMARY_FILE};
pub use run::{
    aggregate, build_instance, run_all, run_seed, Aggregate, Certificate, EvalRow, EventFrequencies, Experiment,
    MonitorSummary, RunOutput, RunSummary, SANDWICH_TOL,
};

use std::fs;

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct ExperimentResult {
    pub experiment: Experiment,
    pub rows: Vec<Vec<EvalRow>>,
    pub runs: Vec<RunSummary>,
    pub aggregate: Aggregate,
}

/// Runs every seed without touching the filesystem.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentResult> {
    let experiment = Experiment::prepare(config)?;
    let outputs = run_all(&experiment);
    collect(experiment, outputs)
}

fn collect(experiment: Experiment, outputs: Vec<RunOutput>) -> Result<ExperimentResult> {
    let mut pairs = Vec::with_capacity(outputs.len());
    for out in outputs {
        pairs.push((out.rows, out.summary?));
    }
    let aggregate = aggregate(&pairs)?;
    let (rows, runs) = pairs.into_iter().unzip();
    Ok(ExperimentResult {
        experiment,
        rows,
        runs,
        aggregate,
    })
}

/// Runs the experiment and writes one CSV per run plus `summary.json` into
/// the configured output directory. If a run fails, the CSVs of every run
/// (partial ones included) are still written before the error is returned.
pub fn run_and_write(config: ExperimentConfig) -> Result<ExperimentResult> {
    let experiment = Experiment::prepare(config)?;
    let dir = experiment.config.output.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let outputs = run_all(&experiment);
    for out in &outputs {
        write_csv(&dir, out.run_index, &out.rows)?;
    }
    let result = collect(experiment, outputs)?;
    write_summary(&dir, &result.experiment, &result.runs, &result.aggregate)?;
    Ok(result)
}
