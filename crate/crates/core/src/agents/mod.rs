//! DDPG and TD3 learners and the two training schedulers.

mod config;
mod eval;
mod learner;
mod noise;
mod train;

pub use config::{AgentConfig, ExplorationType, Schedule};
pub use eval::{evaluate_policy, Evaluator, DEFAULT_PROBE_SIZE};
pub use learner::{Learner, TargetReduction, UpdateStats};
pub use noise::{GaussianNoise, Lag1Autocorrelation, NoiseProcess, OuNoiseState};
pub use train::{
    mean_std, train_regular, train_streaming, EvalOutcome, LogRow, NoHooks, RunLog, Scheduler,
    TrainHooks, TrainingRun,
};
