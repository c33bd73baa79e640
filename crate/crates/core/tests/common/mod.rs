#![allow(dead_code)]

use rand::Rng;
use rud_core::agents::{AgentConfig, Learner, Schedule, TrainingRun};
use rud_core::env::{EnvId, EnvSpec};
use rud_core::replay::{Batch, Transition};
use rud_core::rng::{stream, Stream};
use rud_core::{Mlp, OutputActivation, ParameterVector};

pub fn tiny_spec() -> EnvSpec {
    EnvSpec {
        state_dim: 2,
        action_dim: 1,
        action_low: vec![-2.0],
        action_high: vec![2.0],
        max_episode_steps: 50,
        reward_range: (-10.0, 0.0),
    }
}

pub fn tiny_config() -> AgentConfig {
    AgentConfig {
        hidden_sizes: vec![4],
        batch_size: 8,
        ..AgentConfig::td3()
    }
}

pub fn tiny_learner(config: AgentConfig, seed: u64) -> Learner {
    Learner::new(config, &tiny_spec(), seed).unwrap()
}

pub fn random_batch(n: usize, seed: u64, done_every: usize) -> Batch {
    let mut rng = stream(seed, Stream::Environment);
    let items: Vec<Transition> = (0..n)
        .map(|k| {
            let s = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let a = vec![rng.random_range(-2.0..2.0)];
            let s2 = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let done = done_every > 0 && k % done_every == 0;
            Transition::new(s, a, rng.random_range(-1.0..0.0), s2, done)
        })
        .collect();
    Batch::from_transitions(items.iter()).unwrap()
}

/// Single linear layer `w·x + b`, identity output.
pub fn constant_critic(input_dim: usize, value: f64) -> Mlp {
    let mut p = vec![0.0; input_dim + 1];
    p[input_dim] = value;
    Mlp::from_params(&[input_dim, 1], OutputActivation::Identity, ParameterVector::new(p)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Small pendulum run: 16-unit hidden layer, batch 32, warmup 64.
pub fn small_pendulum_run(total: usize, block: usize, seed: u64) -> TrainingRun {
    let config = AgentConfig {
        hidden_sizes: vec![16],
        batch_size: 32,
        ..AgentConfig::td3()
    };
    let env = EnvId::Pendulum.make();
    let learner = Learner::new(config, env.spec(), seed).unwrap();
    let schedule = Schedule {
        total_steps: total,
        block_size: block,
        warmup_steps: 64,
        eval_interval: 50,
    };
    TrainingRun::new(learner, env, schedule, seed).unwrap()
}
