//! Shared fixtures for the criterion benchmarks.

use rud_core::agents::{AgentConfig, Learner};
use rud_core::env::EnvId;
use rud_core::replay::{ReplayBuffer, Transition};
use rud_core::rng::{stream, Stream};

/// A replay buffer filled with `len` pendulum transitions under a fixed torque sweep.
pub fn filled_pendulum_buffer(len: usize, seed: u64) -> ReplayBuffer {
    let mut env = EnvId::Pendulum.make();
    let mut buf = ReplayBuffer::new(len, stream(seed, Stream::ReplaySampling)).expect("positive capacity");
    let mut state = env.reset(seed);
    for k in 0..len {
        let action = vec![((k as f64) * 0.37).sin() * 2.0];
        let step = env.step(&action).expect("valid action");
        buf.insert(Transition::new(state, action, step.reward, step.next_state.clone(), step.done));
        state = if step.truncated { env.reset(seed + k as u64) } else { step.next_state };
    }
    buf
}

pub fn pendulum_learner(config: AgentConfig, seed: u64) -> Learner {
    let env = EnvId::Pendulum.make();
    Learner::new(config, env.spec(), seed).expect("valid config")
}
