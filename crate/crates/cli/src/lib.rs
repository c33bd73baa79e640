//! Experiment harness: configuration files, multi-seed orchestration, CSV
//! artifacts and the analysis commands.

pub mod commands;
pub mod config;
pub mod harness;

pub use commands::{
    analyze_bias, analyze_replay_counts, cmd_ablate_ddpg, cmd_sweep_f, cmd_train, AnalysisReport,
    BiasArgs, CommandOutput, ReplayCountsArgs,
};
pub use config::{Algorithm, ConfigError, ExperimentConfig};
