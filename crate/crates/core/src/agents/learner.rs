use rand::Rng as _;
use rand_distr::StandardNormal;

use super::config::AgentConfig;
use super::noise::NoiseProcess;
use crate::env::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::replay::Batch;
use crate::rng::{stream, Rng, Stream};
use crate::tensor::{AdamState, Matrix, Mlp, OutputActivation, ParameterVector};

/// How the target critics' estimates are combined in the bootstrap target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetReduction {
    /// Minimum over all target critics (clipped double Q).
    Min,
    /// First target critic only.
    First,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Present when this update also stepped the actor and the targets.
    pub actor_objective: Option<f64>,
}

/// Actor, one or two critics, their target copies and optimizers.
///
/// The actor emits `tanh` outputs mapped affinely onto the action box.
/// Critics take `[state, action]` and output a scalar.
#[derive(Debug, Clone)]
pub struct Learner {
    config: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    action_mid: Vec<f64>,
    action_scale: Vec<f64>,
    actor: Mlp,
    actor_target: Mlp,
    critics: Vec<Mlp>,
    critic_targets: Vec<Mlp>,
    actor_opt: AdamState,
    critic_opts: Vec<AdamState>,
    critic_updates: u64,
    actor_updates: u64,
    smoothing_rng: Rng,
}

impl Learner {
    pub fn new(config: AgentConfig, spec: &EnvSpec, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream(seed, Stream::Init);
        let mut actor_sizes = vec![spec.state_dim];
        actor_sizes.extend(&config.hidden_sizes);
        actor_sizes.push(spec.action_dim);
        let mut critic_sizes = vec![spec.state_dim + spec.action_dim];
        critic_sizes.extend(&config.hidden_sizes);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, OutputActivation::Tanh, &mut init)?;
        let critics = (0..config.num_critics())
            .map(|_| Mlp::new(&critic_sizes, OutputActivation::Identity, &mut init))
            .collect::<Result<Vec<_>>>()?;
        Self::with_networks(config, spec, actor, critics, seed)
    }

    /// Assemble a learner around given online networks; targets start as
    /// exact copies.
    pub fn with_networks(
        config: AgentConfig,
        spec: &EnvSpec,
        actor: Mlp,
        critics: Vec<Mlp>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        check_dim("actor input", spec.state_dim, actor.input_dim())?;
        check_dim("actor output", spec.action_dim, actor.output_dim())?;
        if actor.output_activation() != OutputActivation::Tanh {
            return Err(Error::ArchitectureMismatch("actor must end in tanh".into()));
        }
        check_dim("critic count", config.num_critics(), critics.len())?;
        for c in &critics {
            check_dim("critic input", spec.state_dim + spec.action_dim, c.input_dim())?;
            check_dim("critic output", 1, c.output_dim())?;
        }
        let actor_opt = AdamState::new(actor.params().len(), config.actor_lr);
        let critic_opts = critics
            .iter()
            .map(|c| AdamState::new(c.params().len(), config.critic_lr))
            .collect();
        Ok(Learner {
            state_dim: spec.state_dim,
            action_dim: spec.action_dim,
            action_low: spec.action_low.clone(),
            action_high: spec.action_high.clone(),
            action_mid: spec.action_mid(),
            action_scale: spec.action_scale(),
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            actor_opt,
            critic_opts,
            critic_updates: 0,
            actor_updates: 0,
            smoothing_rng: stream(seed, Stream::TargetSmoothing),
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn actor_target_mut(&mut self) -> &mut Mlp {
        &mut self.actor_target
    }

    pub fn critics(&self) -> &[Mlp] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp] {
        &mut self.critics
    }

    pub fn critic_targets(&self) -> &[Mlp] {
        &self.critic_targets
    }

    pub fn critic_targets_mut(&mut self) -> &mut [Mlp] {
        &mut self.critic_targets
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    pub fn action_scale(&self) -> &[f64] {
        &self.action_scale
    }

    fn scale_actions(&self, raw: &mut Matrix) {
        for r in 0..raw.rows() {
            for (j, v) in raw.row_mut(r).iter_mut().enumerate() {
                *v = self.action_mid[j] + self.action_scale[j] * *v;
            }
        }
    }

    fn clip_actions(&self, actions: &mut Matrix) {
        for r in 0..actions.rows() {
            for (j, v) in actions.row_mut(r).iter_mut().enumerate() {
                *v = v.clamp(self.action_low[j], self.action_high[j]);
            }
        }
    }

    fn critic_input(states: &Matrix, actions: &Matrix) -> Result<Matrix> {
        check_dim("critic input rows", states.rows(), actions.rows())?;
        let width = states.cols() + actions.cols();
        let mut data = Vec::with_capacity(states.rows() * width);
        for r in 0..states.rows() {
            data.extend_from_slice(states.row(r));
            data.extend_from_slice(actions.row(r));
        }
        Matrix::new(states.rows(), width, data)
    }

    /// Deterministic policy action mapped onto the action box.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        check_dim("Learner::act state", self.state_dim, state.len())?;
        let x = Matrix::new(1, state.len(), state.to_vec())?;
        Ok(self.act_batch(&x)?.into_data())
    }

    pub fn act_batch(&self, states: &Matrix) -> Result<Matrix> {
        let mut a = self.actor.forward_batch(states)?;
        self.scale_actions(&mut a);
        Ok(a)
    }

    /// `clip(act(state) + scale * noise)`; deterministic without noise.
    pub fn select_action(
        &self,
        state: &[f64],
        noise: Option<(&mut dyn NoiseProcess, &mut Rng)>,
    ) -> Result<Vec<f64>> {
        let mut a = self.act(state)?;
        if let Some((process, rng)) = noise {
            let eps = process.sample(rng);
            check_dim("exploration noise", self.action_dim, eps.len())?;
            for ((a, e), (s, (lo, hi))) in a
                .iter_mut()
                .zip(&eps)
                .zip(self.action_scale.iter().zip(self.action_low.iter().zip(&self.action_high)))
            {
                *a = (*a + s * e).clamp(*lo, *hi);
            }
        }
        Ok(a)
    }

    /// Q-values of `critic` on a batch of state-action pairs.
    pub fn q_values(critic: &Mlp, states: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        Ok(critic
            .forward_batch(&Self::critic_input(states, actions)?)?
            .into_data())
    }

    /// `y = r + γ (1 − done) Q′(s′, μ′(s′))` with the first target critic.
    pub fn compute_target_ddpg(&self, batch: &Batch, gamma: f64) -> Result<Vec<f64>> {
        self.bootstrap(batch, gamma, None, TargetReduction::First)
    }

    /// Clipped double-Q target with target policy smoothing. Draws one
    /// clipped noise vector per transition from the smoothing stream.
    pub fn compute_target_td3(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let noise = if self.config.use_target_policy_smoothing {
            Some(self.draw_smoothing_noise(batch.len()))
        } else {
            None
        };
        let reduction = if self.config.use_clipped_double_q {
            TargetReduction::Min
        } else {
            TargetReduction::First
        };
        self.bootstrap(batch, self.config.gamma, noise.as_ref(), reduction)
    }

    /// Targets for the configured algorithm.
    pub fn compute_targets(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        if self.config.use_clipped_double_q || self.config.use_target_policy_smoothing {
            self.compute_target_td3(batch)
        } else {
            self.compute_target_ddpg(batch, self.config.gamma)
        }
    }

    /// `n x action_dim` draws of `clip(N(0, σ), −c, c)` in normalized units.
    pub fn draw_smoothing_noise(&mut self, n: usize) -> Matrix {
        let (sigma, c) = (self.config.target_policy_noise_sigma, self.config.target_noise_clip);
        let data = (0..n * self.action_dim)
            .map(|_| (sigma * self.smoothing_rng.sample::<f64, _>(StandardNormal)).clamp(-c, c))
            .collect();
        Matrix::new(n, self.action_dim, data).expect("shape by construction")
    }

    /// Bootstrap targets given an explicit smoothing-noise draw.
    pub fn bootstrap(
        &self,
        batch: &Batch,
        gamma: f64,
        noise: Option<&Matrix>,
        reduction: TargetReduction,
    ) -> Result<Vec<f64>> {
        let mut next_actions = self.actor_target.forward_batch(&batch.next_states)?;
        self.scale_actions(&mut next_actions);
        if let Some(eps) = noise {
            check_dim("smoothing noise rows", batch.len(), eps.rows())?;
            check_dim("smoothing noise cols", self.action_dim, eps.cols())?;
            for r in 0..next_actions.rows() {
                let e = eps.row(r);
                for (j, v) in next_actions.row_mut(r).iter_mut().enumerate() {
                    *v += self.action_scale[j] * e[j];
                }
            }
            self.clip_actions(&mut next_actions);
        }
        let input = Self::critic_input(&batch.next_states, &next_actions)?;
        let critics = match reduction {
            TargetReduction::Min => &self.critic_targets[..],
            TargetReduction::First => &self.critic_targets[..1],
        };
        let mut q = critics[0].forward_batch(&input)?.into_data();
        for c in &critics[1..] {
            for (q, v) in q.iter_mut().zip(c.forward_batch(&input)?.data()) {
                *q = q.min(*v);
            }
        }
        Ok(batch
            .rewards
            .iter()
            .zip(&batch.dones)
            .zip(&q)
            .map(|((r, d), q)| r + if *d { 0.0 } else { gamma * q })
            .collect())
    }

    /// Mean squared TD error of critic `index` and its parameter gradient.
    pub fn critic_loss_gradient(
        &self,
        index: usize,
        batch: &Batch,
        targets: &[f64],
    ) -> Result<(f64, ParameterVector)> {
        check_dim("critic targets", batch.len(), targets.len())?;
        let critic = &self.critics[index];
        let input = Self::critic_input(&batch.states, &batch.actions)?;
        let trace = critic.forward_trace(&input)?;
        let n = batch.len() as f64;
        let residual: Vec<f64> = trace
            .output()
            .data()
            .iter()
            .zip(targets)
            .map(|(q, y)| q - y)
            .collect();
        let loss = residual.iter().map(|r| r * r).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite("critic loss"));
        }
        let og = Matrix::new(batch.len(), 1, residual.iter().map(|r| 2.0 * r / n).collect())?;
        let mut grad = vec![0.0; critic.params().len()];
        critic.backward_trace(&trace, &og, Some(&mut grad), false)?;
        Ok((loss, ParameterVector::new(grad)))
    }

    /// One Adam step per critic toward fixed targets. Returns the pre-step
    /// loss averaged over critics.
    pub fn update_critic(&mut self, batch: &Batch, targets: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        let grads = (0..self.critics.len())
            .map(|i| self.critic_loss_gradient(i, batch, targets))
            .collect::<Result<Vec<_>>>()?;
        for (i, (loss, grad)) in grads.into_iter().enumerate() {
            self.critic_opts[i].step(self.critics[i].params_mut().as_mut_slice(), grad.as_slice())?;
            total += loss;
        }
        self.critic_updates += 1;
        Ok(total / self.critics.len() as f64)
    }

    /// `J = mean_s Q₁(s, μ(s))` and its gradient with respect to the actor
    /// parameters, by the chain rule through the frozen first critic.
    pub fn actor_objective_gradient(&self, states: &Matrix) -> Result<(f64, ParameterVector)> {
        let n = states.rows();
        let actor_trace = self.actor.forward_trace(states)?;
        let mut actions = actor_trace.output().clone();
        self.scale_actions(&mut actions);
        let critic = &self.critics[0];
        let q_trace = critic.forward_trace(&Self::critic_input(states, &actions)?)?;
        let objective = q_trace.output().data().iter().sum::<f64>() / n as f64;
        let og = Matrix::new(n, 1, vec![1.0 / n as f64; n])?;
        let d_input = critic
            .backward_trace(&q_trace, &og, None, true)?
            .expect("input gradient requested");
        let mut d_raw = Matrix::zeros(n, self.action_dim);
        for r in 0..n {
            let src = &d_input.row(r)[self.state_dim..];
            for (j, v) in d_raw.row_mut(r).iter_mut().enumerate() {
                *v = src[j] * self.action_scale[j];
            }
        }
        let mut grad = vec![0.0; self.actor.params().len()];
        self.actor
            .backward_trace(&actor_trace, &d_raw, Some(&mut grad), false)?;
        Ok((objective, ParameterVector::new(grad)))
    }

    /// One Adam ascent step on `J`. Returns the pre-step objective.
    pub fn update_actor(&mut self, batch: &Batch) -> Result<f64> {
        let (objective, grad) = self.actor_objective_gradient(&batch.states)?;
        let descent: Vec<f64> = grad.as_slice().iter().map(|g| -g).collect();
        self.actor_opt.step(self.actor.params_mut().as_mut_slice(), &descent)?;
        self.actor_updates += 1;
        Ok(objective)
    }

    /// `θ′ ← (1 − τ) θ′ + τ θ` for every target network.
    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid("tau", "must lie in (0, 1]"));
        }
        let pairs = std::iter::once((&mut self.actor_target, &self.actor))
            .chain(self.critic_targets.iter_mut().zip(self.critics.iter()));
        for (target, online) in pairs {
            for (t, o) in target
                .params_mut()
                .as_mut_slice()
                .iter_mut()
                .zip(online.params().as_slice())
            {
                *t = (1.0 - tau) * *t + tau * o;
            }
        }
        Ok(())
    }

    /// Critic update, then actor and target updates every `policy_delay`
    /// critic updates.
    pub fn train_step(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let targets = self.compute_targets(batch)?;
        let critic_loss = self.update_critic(batch, &targets)?;
        let actor_objective = if self.critic_updates % self.config.policy_delay == 0 {
            let j = self.update_actor(batch)?;
            self.soft_update(self.config.tau)?;
            Some(j)
        } else {
            None
        };
        Ok(UpdateStats {
            critic_loss,
            actor_objective,
        })
    }
}
