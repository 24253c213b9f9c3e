use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lmmg::game_model::Instance;
use lmmg::harness::{
    build_instance, parse_config, run_and_write, Algorithm, ExperimentConfig, InstanceKind, InstanceSpec,
};
use lmmg::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lmmg",
    version,
    about = "Optimistic self-play on linear mixture Markov games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Number of runs, with seeds derived from the config's master seed.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        algo: Option<AlgoArg>,
        #[arg(long)]
        monitor: bool,
        #[arg(long)]
        eval_every: Option<usize>,
    },
    /// Check an instance file.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Generate a random instance file.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "states", short = 'S')]
        num_states: Option<usize>,
        #[arg(long = "actions-max", short = 'A')]
        num_actions_max: Option<usize>,
        #[arg(long = "actions-min", short = 'B')]
        num_actions_min: Option<usize>,
        #[arg(long, short = 'H')]
        horizon: Option<usize>,
        #[arg(long, short = 'd')]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Simultaneous,
    TurnBased,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    TabularRandom,
    LinearRandom,
    DummyMdp,
    TurnBasedRandom,
}

fn describe(instance: &Instance) -> String {
    let (kind, shape) = match instance {
        Instance::Simultaneous(mg) => ("linear-mixture", mg.shape()),
        Instance::TurnBased(tb) => ("turn-based", tb.model().shape()),
    };
    format!(
        "{kind}: S={} A={} B={} H={} d={}",
        shape.num_states, shape.num_actions_max, shape.num_actions_min, shape.horizon, shape.dim
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            algo,
            monitor,
            eval_every,
        } => {
            let text = fs::read_to_string(&config).map_err(|e| Error::Io {
                path: config,
                source: e,
            })?;
            let mut cfg = parse_config(&text)?;
            if let Some(n) = seeds {
                cfg.seeds = None;
                cfg.num_seeds = n;
            }
            if let Some(dir) = out {
                cfg.output = dir;
            }
            if let Some(a) = algo {
                cfg.algorithm = match a {
                    AlgoArg::Simultaneous => Algorithm::Simultaneous,
                    AlgoArg::TurnBased => Algorithm::TurnBased,
                };
            }
            cfg.monitor |= monitor;
            if eval_every.is_some() {
                cfg.eval_every = eval_every;
            }
            let result = run_and_write(cfg)?;
            for r in &result.runs {
                println!(
                    "run {} seed {}: regret {:.6}, best episode {} (gap {:.6})",
                    r.run_index, r.seed, r.regret, r.certificate.episode, r.certificate.gap
                );
            }
            println!(
                "mean regret {:.6} over {} runs; outputs in {}",
                result.aggregate.final_regret_mean,
                result.runs.len(),
                result.experiment.config.output.display()
            );
            Ok(())
        }
        Command::Validate { instance } => {
            let inst = Instance::load(&instance)?;
            inst.validate()?;
            println!("ok {}", describe(&inst));
            Ok(())
        }
        Command::Gen {
            kind,
            out,
            num_states,
            num_actions_max,
            num_actions_min,
            horizon,
            dim,
            seed,
        } => {
            let spec = InstanceSpec {
                kind: match kind {
                    KindArg::TabularRandom => InstanceKind::TabularRandom,
                    KindArg::LinearRandom => InstanceKind::LinearRandom,
                    KindArg::DummyMdp => InstanceKind::DummyMdp,
                    KindArg::TurnBasedRandom => InstanceKind::TurnBasedRandom,
                },
                num_states,
                num_actions_max,
                num_actions_min,
                horizon,
                dim,
                seed,
                path: None,
            };
            ExperimentConfig::new(spec.clone(), 1).validate()?;
            let inst = build_instance(&spec)?;
            inst.save(&out)?;
            println!("wrote {} to {}", describe(&inst), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
