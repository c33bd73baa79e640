use rand::RngCore;

use super::learner::Learner;
use super::train::{EvalOutcome, TrainHooks};
use crate::analysis::{probe_pairs, q_change_diagnostic, q_std_diagnostic};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::rng::{stream, Rng, Stream};
use crate::tensor::Mlp;

pub const DEFAULT_PROBE_SIZE: usize = 1000;

/// Noiseless episodes of the current policy. Episode seeds come from `rng`.
pub fn evaluate_policy(
    learner: &Learner,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset(rng.next_u64());
        let mut total = 0.0;
        loop {
            let action = learner.act(&state)?;
            let step = env.step(&action)?;
            total += step.reward;
            if step.done || step.truncated {
                break;
            }
            state = step.next_state;
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("evaluation return"));
        }
        returns.push(total);
    }
    Ok(returns)
}

/// Evaluation hook: noiseless returns on a dedicated environment instance,
/// plus the Q-spread and Q-change diagnostics on replay probes.
///
/// Uses its own evaluation and diagnostic streams, so evaluating never
/// perturbs training.
pub struct Evaluator {
    env: Box<dyn Environment>,
    episodes: usize,
    rng: Rng,
    diag_rng: Rng,
    probe_size: usize,
    prev_critic: Mlp,
}

impl Evaluator {
    pub fn new(env: Box<dyn Environment>, episodes: usize, seed: u64, initial_critic: Mlp) -> Self {
        Evaluator {
            env,
            episodes,
            rng: stream(seed, Stream::Evaluation),
            diag_rng: stream(seed, Stream::Diagnostics),
            probe_size: DEFAULT_PROBE_SIZE,
            prev_critic: initial_critic,
        }
    }

    pub fn with_probe_size(mut self, probe_size: usize) -> Self {
        self.probe_size = probe_size;
        self
    }
}

impl TrainHooks for Evaluator {
    fn on_eval(
        &mut self,
        _step: usize,
        learner: &Learner,
        buffer: &ReplayBuffer,
    ) -> Result<Option<EvalOutcome>> {
        let returns = evaluate_policy(learner, self.env.as_mut(), self.episodes, &mut self.rng)?;
        let probe = self.probe_size.min(buffer.len());
        let (q_std, q_change) = if probe == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let q_std = q_std_diagnostic(learner, buffer, probe, &mut self.diag_rng)?;
            let pairs = probe_pairs(buffer, probe, &mut self.diag_rng)?;
            let current = &learner.critics()[0];
            let q_change = q_change_diagnostic(&self.prev_critic, current, &pairs)?;
            self.prev_critic = current.clone();
            (q_std, q_change)
        };
        Ok(Some(EvalOutcome {
            returns,
            q_std,
            q_change,
        }))
    }
}
