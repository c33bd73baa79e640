use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rud_cli::commands::summarize_table;
use rud_cli::{
    analyze_bias, analyze_replay_counts, cmd_ablate_ddpg, cmd_sweep_f, cmd_train, BiasArgs,
    CommandOutput, ExperimentConfig, ReplayCountsArgs,
};

#[derive(Parser)]
#[command(name = "rud", version, about = "Regularly updated deterministic policy gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of one configuration.
    Train { config: PathBuf },
    /// Train the configuration once per block size F (F=1 is the streaming baseline).
    SweepF {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = commands_default_f())]
        values: Vec<usize>,
    },
    /// Replay-count and target-bias oracles.
    Analyze {
        #[command(subcommand)]
        which: Analyze,
    },
    /// Plain DDPG under the streaming and regular schedulers, paired seeds.
    AblateDdpg { config: PathBuf },
    /// Per-curve summary of a sweep-f or ablate-ddpg table.
    Summarize { table: PathBuf },
}

#[derive(Subcommand)]
enum Analyze {
    ReplayCounts {
        #[arg(long = "total-steps", short = 'T', default_value_t = 1_000_000)]
        total_steps: usize,
        #[arg(long = "batch-size", short = 'N', default_value_t = 128)]
        batch_size: usize,
        #[arg(long = "block-size", short = 'F', default_value_t = 1)]
        block_size: usize,
        /// Monte Carlo trials; 0 reports exact values only.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "grid-points", default_value_t = 20)]
        grid_points: usize,
        #[arg(long = "output-dir")]
        output_dir: Option<PathBuf>,
    },
    Bias {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![0.5, 1.0, 2.0])]
        sigma: Vec<f64>,
        #[arg(long = "v-star", value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, default_values_t = vec![-1.0, 0.0, 1.0])]
        v_star: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use Q2 = Q1, where the minimum carries no bias.
        #[arg(long)]
        correlated: bool,
        #[arg(long = "output-dir")]
        output_dir: Option<PathBuf>,
    },
}

fn commands_default_f() -> Vec<usize> {
    rud_cli::config::DEFAULT_F_SWEEP.to_vec()
}

fn report_runs(out: &CommandOutput) -> ExitCode {
    for g in &out.groups {
        let last = g.aggregate.last();
        println!(
            "{}: {} seeds, {} failed, final mean return {}",
            g.label,
            g.runs.len(),
            g.failures(),
            last.map_or("n/a".to_string(), |a| format!("{:.3} (std {:.3}) at step {}", a.mean, a.std, a.step))
        );
        println!("  artifacts in {}", g.dir.display());
    }
    if let Some(t) = &out.table {
        println!("table: {}", t.display());
    }
    if out.failures() > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config } => Ok(report_runs(&cmd_train(&ExperimentConfig::load(&config)?)?)),
        Command::SweepF { config, values } => {
            Ok(report_runs(&cmd_sweep_f(&ExperimentConfig::load(&config)?, &values)?))
        }
        Command::AblateDdpg { config } => {
            Ok(report_runs(&cmd_ablate_ddpg(&ExperimentConfig::load(&config)?)?))
        }
        Command::Summarize { table } => {
            print!("{}", summarize_table(&table)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { which } => {
            let report = match which {
                Analyze::ReplayCounts {
                    total_steps,
                    batch_size,
                    block_size,
                    trials,
                    seed,
                    grid_points,
                    output_dir,
                } => analyze_replay_counts(&ReplayCountsArgs {
                    total_steps,
                    batch_size,
                    block_size,
                    trials,
                    seed,
                    grid_points,
                    output_dir,
                })?,
                Analyze::Bias {
                    sigma,
                    v_star,
                    samples,
                    seed,
                    correlated,
                    output_dir,
                } => {
                    analyze_bias(&BiasArgs {
                        sigmas: sigma,
                        v_stars: v_star,
                        samples,
                        seed,
                        correlated,
                        output_dir,
                    })?
                    .0
                }
            };
            print!("{}", report.render());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
