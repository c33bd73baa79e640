//! Streaming and regularly updated training loops.
//!
//! Both loops share the same step and update primitives so that a regular
//! schedule with block size 1 reproduces the streaming schedule exactly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng as _, RngCore};

use super::config::{ExplorationType, Schedule};
use super::learner::Learner;
use super::noise::{GaussianNoise, Lag1Autocorrelation, NoiseProcess, OuNoiseState};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::replay::{ReplayBuffer, Transition};
use crate::rng::{stream, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    /// One environment step, then one update, every time step.
    Streaming,
    /// `F` frozen-policy environment steps, then `F` updates.
    Regular,
}

impl Scheduler {
    pub fn train(self, run: &mut TrainingRun, hooks: &mut dyn TrainHooks) -> Result<RunLog> {
        match self {
            Scheduler::Streaming => train_streaming(run, hooks),
            Scheduler::Regular => train_regular(run, hooks),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheduler::Streaming => "streaming",
            Scheduler::Regular => "regular",
        }
    }
}

impl FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "streaming" => Ok(Scheduler::Streaming),
            "regular" => Ok(Scheduler::Regular),
            other => Err(Error::invalid("scheduler", format!("unknown value {other:?}"))),
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one evaluation point, produced by [`TrainHooks::on_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub returns: Vec<f64>,
    pub q_std: f64,
    pub q_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub eval_return_mean: f64,
    pub eval_return_std: f64,
    /// Mean critic loss over the updates since the previous row (NaN if none).
    pub critic_loss: f64,
    pub q_std_diagnostic: f64,
    pub q_change_diagnostic: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    pub env_steps: usize,
    pub updates: u64,
    pub actor_updates: u64,
    pub episodes: usize,
    pub sample_calls: u64,
    /// Lag-1 autocorrelation of the first exploration-noise component,
    /// within episodes.
    pub noise_lag1_autocorr: Option<f64>,
}

pub trait TrainHooks {
    fn after_env_step(&mut self, _step: usize, _learner: &Learner) {}

    /// `step` is the time index the update is associated with.
    fn after_update(&mut self, _step: usize, _learner: &Learner) {}

    fn on_eval(
        &mut self,
        _step: usize,
        _learner: &Learner,
        _buffer: &ReplayBuffer,
    ) -> Result<Option<EvalOutcome>> {
        Ok(None)
    }
}

pub struct NoHooks;

impl TrainHooks for NoHooks {}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Records the first component of each noise draw.
struct Recording<'a> {
    inner: &'a mut dyn NoiseProcess,
    first: Option<f64>,
}

impl NoiseProcess for Recording<'_> {
    fn sample(&mut self, rng: &mut Rng) -> Vec<f64> {
        let eps = self.inner.sample(rng);
        self.first = eps.first().copied();
        eps
    }
}

/// Everything a training loop mutates: learner, environment, replay buffer
/// and the per-purpose random streams.
pub struct TrainingRun {
    learner: Learner,
    env: Box<dyn Environment>,
    buffer: ReplayBuffer,
    schedule: Schedule,
    noise: Box<dyn NoiseProcess>,
    explore_rng: Rng,
    env_rng: Rng,
    state: Vec<f64>,
    env_steps: usize,
    episodes: usize,
    loss_sum: f64,
    loss_count: usize,
    autocorr: Lag1Autocorrelation,
}

impl TrainingRun {
    /// Replay capacity equals the step budget, so nothing is ever evicted.
    pub fn new(learner: Learner, env: Box<dyn Environment>, schedule: Schedule, seed: u64) -> Result<Self> {
        let capacity = schedule.total_steps;
        Self::with_capacity(learner, env, schedule, seed, capacity)
    }

    pub fn with_capacity(
        learner: Learner,
        mut env: Box<dyn Environment>,
        schedule: Schedule,
        seed: u64,
        capacity: usize,
    ) -> Result<Self> {
        let cfg = learner.config();
        schedule.validate(cfg.batch_size)?;
        let action_dim = env.spec().action_dim;
        let noise: Box<dyn NoiseProcess> = match cfg.exploration_type {
            ExplorationType::Gaussian => Box::new(GaussianNoise {
                sigma: cfg.exploration_noise_sigma,
                dim: action_dim,
            }),
            ExplorationType::OrnsteinUhlenbeck => Box::new(OuNoiseState::new(
                action_dim,
                cfg.ou_theta,
                cfg.exploration_noise_sigma,
                cfg.ou_dt,
            )),
        };
        let mut env_rng = stream(seed, Stream::Environment);
        let state = env.reset(env_rng.next_u64());
        Ok(TrainingRun {
            buffer: ReplayBuffer::new(capacity, stream(seed, Stream::ReplaySampling))?,
            learner,
            env,
            schedule,
            noise,
            explore_rng: stream(seed, Stream::Exploration),
            env_rng,
            state,
            env_steps: 0,
            episodes: 0,
            loss_sum: 0.0,
            loss_count: 0,
            autocorr: Lag1Autocorrelation::default(),
        })
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    fn env_step(&mut self, hooks: &mut dyn TrainHooks) -> Result<()> {
        self.env_steps += 1;
        let t = self.env_steps;
        let spec = self.env.spec();
        let action = if t <= self.schedule.warmup_steps {
            spec.action_low
                .iter()
                .zip(&spec.action_high)
                .map(|(lo, hi)| self.explore_rng.random_range(*lo..=*hi))
                .collect()
        } else {
            let mut rec = Recording {
                inner: self.noise.as_mut(),
                first: None,
            };
            let a = self
                .learner
                .select_action(&self.state, Some((&mut rec, &mut self.explore_rng)))?;
            if let Some(x) = rec.first {
                self.autocorr.push(x);
            }
            a
        };
        let result = self.env.step(&action)?;
        if !result.reward.is_finite() {
            return Err(Error::NonFinite("environment reward"));
        }
        let next_state = result.next_state;
        self.buffer.insert(Transition::new(
            std::mem::take(&mut self.state),
            action,
            result.reward,
            next_state.clone(),
            result.done,
        ));
        hooks.after_env_step(t, &self.learner);
        if result.done || result.truncated {
            self.state = self.env.reset(self.env_rng.next_u64());
            self.noise.reset();
            self.autocorr.break_sequence();
            self.episodes += 1;
        } else {
            self.state = next_state;
        }
        Ok(())
    }

    /// Sample and update once if the buffer holds more than the warmup.
    fn maybe_update(&mut self, step: usize, hooks: &mut dyn TrainHooks) -> Result<()> {
        if self.buffer.len() <= self.schedule.warmup_steps {
            return Ok(());
        }
        let n = self.learner.config().batch_size;
        let batch = self.buffer.sample(n)?;
        let stats = self.learner.train_step(&batch)?;
        self.loss_sum += stats.critic_loss;
        self.loss_count += 1;
        if self.buffer.sampled_total() != n as u64 * self.buffer.sample_calls() {
            return Err(Error::Invariant("replay draws != batch size x sample calls".into()));
        }
        hooks.after_update(step, &self.learner);
        Ok(())
    }

    fn check_counters(&self) -> Result<()> {
        if self.buffer.counters_conserved() {
            Ok(())
        } else {
            Err(Error::Invariant("replay counters do not sum to total draws".into()))
        }
    }

    fn maybe_eval(&mut self, step: usize, hooks: &mut dyn TrainHooks, log: &mut RunLog) -> Result<()> {
        if step % self.schedule.eval_interval != 0 {
            return Ok(());
        }
        self.check_counters()?;
        if let Some(outcome) = hooks.on_eval(step, &self.learner, &self.buffer)? {
            let (mean, std) = mean_std(&outcome.returns);
            let critic_loss = if self.loss_count == 0 {
                f64::NAN
            } else {
                self.loss_sum / self.loss_count as f64
            };
            self.loss_sum = 0.0;
            self.loss_count = 0;
            log.rows.push(LogRow {
                step,
                eval_return_mean: mean,
                eval_return_std: std,
                critic_loss,
                q_std_diagnostic: outcome.q_std,
                q_change_diagnostic: outcome.q_change,
            });
        }
        Ok(())
    }

    fn finish(&self, mut log: RunLog) -> Result<RunLog> {
        self.check_counters()?;
        log.env_steps = self.env_steps;
        log.updates = self.learner.critic_updates();
        log.actor_updates = self.learner.actor_updates();
        log.episodes = self.episodes;
        log.sample_calls = self.buffer.sample_calls();
        log.noise_lag1_autocorr = self.autocorr.value();
        Ok(log)
    }
}

/// Interleave one environment step and one update per time step.
pub fn train_streaming(run: &mut TrainingRun, hooks: &mut dyn TrainHooks) -> Result<RunLog> {
    let mut log = RunLog::default();
    for t in run.env_steps + 1..=run.schedule.total_steps {
        run.env_step(hooks)?;
        run.maybe_update(t, hooks)?;
        run.maybe_eval(t, hooks, &mut log)?;
    }
    run.finish(log)
}

/// Alternate `F` environment steps under a frozen policy with `F` update
/// iterations. A trailing partial block runs the remaining steps in each
/// phase.
pub fn train_regular(run: &mut TrainingRun, hooks: &mut dyn TrainHooks) -> Result<RunLog> {
    let mut log = RunLog::default();
    let total = run.schedule.total_steps;
    let block = run.schedule.block_size;
    while run.env_steps < total {
        let start = run.env_steps;
        let len = block.min(total - start);
        for _ in 0..len {
            run.env_step(hooks)?;
        }
        for k in 1..=len {
            run.maybe_update(start + k, hooks)?;
            run.maybe_eval(start + k, hooks, &mut log)?;
        }
    }
    run.finish(log)
}
