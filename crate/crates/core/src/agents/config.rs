use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplorationType {
    Gaussian,
    OrnsteinUhlenbeck,
}

impl FromStr for ExplorationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ExplorationType::Gaussian),
            "ou" | "ornstein_uhlenbeck" => Ok(ExplorationType::OrnsteinUhlenbeck),
            other => Err(Error::invalid("exploration_type", format!("unknown value {other:?}"))),
        }
    }
}

impl fmt::Display for ExplorationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplorationType::Gaussian => "gaussian",
            ExplorationType::OrnsteinUhlenbeck => "ornstein_uhlenbeck",
        })
    }
}

/// Learner hyperparameters. Noise scales are in units of the action
/// half-range, so `exploration_noise_sigma = 0.1` on a `[-2, 2]` torque
/// adds noise with standard deviation 0.2.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden_sizes: Vec<usize>,
    pub exploration_noise_sigma: f64,
    pub exploration_type: ExplorationType,
    pub ou_theta: f64,
    pub ou_dt: f64,
    pub target_policy_noise_sigma: f64,
    pub target_noise_clip: f64,
    pub policy_delay: u64,
    pub use_clipped_double_q: bool,
    pub use_target_policy_smoothing: bool,
}

impl AgentConfig {
    /// TD3 with the settings used for the regularly updated learner.
    pub fn td3() -> Self {
        AgentConfig {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            hidden_sizes: vec![64, 64],
            exploration_noise_sigma: 0.1,
            exploration_type: ExplorationType::Gaussian,
            ou_theta: 0.15,
            ou_dt: 1e-2,
            target_policy_noise_sigma: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
            use_clipped_double_q: true,
            use_target_policy_smoothing: true,
        }
    }

    /// Plain DDPG: one critic, OU exploration, no smoothing, no delay.
    pub fn ddpg() -> Self {
        AgentConfig {
            batch_size: 128,
            exploration_noise_sigma: 0.2,
            exploration_type: ExplorationType::OrnsteinUhlenbeck,
            policy_delay: 1,
            use_clipped_double_q: false,
            use_target_policy_smoothing: false,
            ..AgentConfig::td3()
        }
    }

    pub fn num_critics(&self) -> usize {
        if self.use_clipped_double_q {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau", "must lie in (0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::invalid("learning rate", "must be positive"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden_sizes", "layer sizes must be positive"));
        }
        if !(self.exploration_noise_sigma >= 0.0 && self.target_policy_noise_sigma >= 0.0) {
            return Err(Error::invalid("noise sigma", "must be non-negative"));
        }
        if !(self.target_noise_clip > 0.0) {
            return Err(Error::invalid("target_noise_clip", "must be positive"));
        }
        if self.policy_delay == 0 {
            return Err(Error::invalid("policy_delay", "must be at least 1"));
        }
        if !(self.ou_theta > 0.0 && self.ou_dt > 0.0) {
            return Err(Error::invalid("ou parameters", "theta and dt must be positive"));
        }
        Ok(())
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::td3()
    }
}

/// Step budget and phase structure of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub total_steps: usize,
    /// Length of each exploration phase and each update phase (regular
    /// scheduler only).
    pub block_size: usize,
    /// Steps with uniformly random actions; no update happens until the
    /// buffer holds more than this many transitions.
    pub warmup_steps: usize,
    pub eval_interval: usize,
}

impl Schedule {
    pub fn new(total_steps: usize, block_size: usize, batch_size: usize) -> Self {
        Schedule {
            total_steps,
            block_size,
            warmup_steps: batch_size.max(1000),
            eval_interval: 1000,
        }
    }

    pub fn validate(&self, batch_size: usize) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::invalid("total_steps", "must be at least 1"));
        }
        if self.block_size == 0 || self.block_size > self.total_steps {
            return Err(Error::invalid("block_size", "must satisfy 1 <= F <= T"));
        }
        if self.warmup_steps < batch_size {
            return Err(Error::invalid("warmup_steps", "must be at least the batch size"));
        }
        if self.eval_interval == 0 {
            return Err(Error::invalid("eval_interval", "must be at least 1"));
        }
        Ok(())
    }
}
