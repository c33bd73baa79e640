mod common;

use common::*;
use proptest::prelude::*;
use rud_core::agents::{AgentConfig, GaussianNoise, Learner, TargetReduction};
use rud_core::env::{EnvId, Environment, Pendulum};
use rud_core::rng::{stream, Stream};
use rud_core::{Matrix, Mlp, OutputActivation};

#[test]
fn select_action_without_noise_is_deterministic() {
    let learner = tiny_learner(tiny_config(), 1);
    let s = [0.3, -0.8];
    assert_eq!(learner.select_action(&s, None).unwrap(), learner.select_action(&s, None).unwrap());
}

#[test]
fn zero_actor_picks_midpoint() {
    let spec = Pendulum::default().spec().clone();
    let cfg = AgentConfig { hidden_sizes: vec![8], ..AgentConfig::td3() };
    let actor = Mlp::zeros(&[3, 8, 1], OutputActivation::Tanh).unwrap();
    let critics = vec![constant_critic(4, 0.0), constant_critic(4, 0.0)];
    let learner = Learner::with_networks(cfg, &spec, actor, critics, 0).unwrap();
    assert_eq!(learner.select_action(&[1.0, 0.0, 0.0], None).unwrap(), vec![0.0]);
}

#[test]
fn gaussian_exploration_has_configured_spread() {
    let spec = Pendulum::default().spec().clone();
    let cfg = AgentConfig { hidden_sizes: vec![8], ..AgentConfig::td3() };
    let actor = Mlp::zeros(&[3, 8, 1], OutputActivation::Tanh).unwrap();
    let critics = vec![constant_critic(4, 0.0), constant_critic(4, 0.0)];
    let learner = Learner::with_networks(cfg, &spec, actor, critics, 0).unwrap();
    let mut noise = GaussianNoise { sigma: 0.1, dim: 1 };
    let mut rng = stream(3, Stream::Exploration);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| learner.select_action(&[1.0, 0.0, 0.0], Some((&mut noise, &mut rng))).unwrap()[0])
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let std = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    // action half-range is 2, so the target std is 0.2
    assert!(rel_err(std, 0.2) < 0.02, "std {std}");
}

#[test]
fn ddpg_target_edge_cases() {
    let learner = tiny_learner(AgentConfig { use_clipped_double_q: false, ..tiny_config() }, 2);
    let batch = random_batch(16, 0, 0);
    assert_eq!(learner.compute_target_ddpg(&batch, 0.0).unwrap(), batch.rewards);

    let terminal = random_batch(16, 1, 1);
    assert!(terminal.dones.iter().all(|d| *d));
    assert_eq!(learner.compute_target_ddpg(&terminal, 0.99).unwrap(), terminal.rewards);

    let mut zeroed = learner.clone();
    zeroed.critic_targets_mut()[0] = Mlp::zeros(&[3, 4, 1], OutputActivation::Identity).unwrap();
    assert_eq!(zeroed.compute_target_ddpg(&batch, 0.99).unwrap(), batch.rewards);
}

#[test]
fn ddpg_target_by_hand() {
    let learner = tiny_learner(AgentConfig { use_clipped_double_q: false, ..tiny_config() }, 5);
    let batch = random_batch(6, 4, 3);
    let y = learner.compute_target_ddpg(&batch, 0.9).unwrap();
    for i in 0..batch.len() {
        let s2 = batch.next_states.row(i);
        let raw = learner.actor_target().forward(s2).unwrap()[0];
        let a2 = 2.0 * raw;
        let q = learner.critic_targets()[0].forward(&[s2[0], s2[1], a2]).unwrap()[0];
        let expected = batch.rewards[i] + if batch.dones[i] { 0.0 } else { 0.9 * q };
        assert!((y[i] - expected).abs() < 1e-12);
    }
}

#[test]
fn td3_with_identical_target_critics_equals_single_critic_target() {
    let mut learner = tiny_learner(tiny_config(), 3);
    let first = learner.critic_targets()[0].clone();
    learner.critic_targets_mut()[1] = first;
    let batch = random_batch(32, 2, 5);
    let noise = learner.draw_smoothing_noise(batch.len());
    let min = learner.bootstrap(&batch, 0.99, Some(&noise), TargetReduction::Min).unwrap();
    let single = learner.bootstrap(&batch, 0.99, Some(&noise), TargetReduction::First).unwrap();
    assert_eq!(min, single);
}

#[test]
fn zero_smoothing_noise_leaves_target_action() {
    let mut learner = tiny_learner(AgentConfig { target_policy_noise_sigma: 0.0, ..tiny_config() }, 4);
    let batch = random_batch(16, 3, 0);
    let noise = learner.draw_smoothing_noise(batch.len());
    assert!(noise.data().iter().all(|v| *v == 0.0));
    let smoothed = learner.compute_target_td3(&batch).unwrap();
    let plain = learner.bootstrap(&batch, 0.99, None, TargetReduction::Min).unwrap();
    assert_eq!(smoothed, plain);
}

#[test]
fn constant_target_critics_take_the_minimum() {
    let mut learner = Learner::with_networks(
        AgentConfig { gamma: 0.9, ..tiny_config() },
        &tiny_spec(),
        Mlp::new(&[2, 4, 1], OutputActivation::Tanh, &mut stream(0, Stream::Init)).unwrap(),
        vec![constant_critic(3, 2.0), constant_critic(3, 1.0)],
        0,
    )
    .unwrap();
    let mut batch = random_batch(4, 0, 0);
    batch.rewards = vec![0.0; 4];
    let y = learner.compute_target_td3(&batch).unwrap();
    for v in y {
        assert!((v - 0.9).abs() < 1e-15);
    }
}

#[test]
fn critic_update_at_zero_residual_is_a_no_op() {
    let mut learner = tiny_learner(tiny_config(), 6);
    let batch = random_batch(16, 6, 0);
    let q = Learner::q_values(&learner.critics()[0], &batch.states, &batch.actions).unwrap();
    // Only meaningful for one critic, so make the second identical.
    let c0 = learner.critics()[0].clone();
    learner.critics_mut()[1] = c0;
    let before: Vec<Mlp> = learner.critics().to_vec();
    let loss = learner.update_critic(&batch, &q).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(learner.critics(), &before[..]);
}

#[test]
fn critic_loss_is_mean_squared_error() {
    let learner = tiny_learner(tiny_config(), 7);
    let batch = random_batch(20, 7, 0);
    let y: Vec<f64> = (0..20).map(|k| k as f64 * 0.1 - 1.0).collect();
    let (loss, _) = learner.critic_loss_gradient(0, &batch, &y).unwrap();
    let q = Learner::q_values(&learner.critics()[0], &batch.states, &batch.actions).unwrap();
    let direct = q.iter().zip(&y).map(|(q, y)| (y - q).powi(2)).sum::<f64>() / 20.0;
    assert!((loss - direct).abs() < 1e-14);
}

#[test]
fn critic_loss_falls_on_a_frozen_batch() {
    let mut learner = tiny_learner(AgentConfig { critic_lr: 1e-2, ..tiny_config() }, 8);
    let batch = random_batch(32, 8, 0);
    let y: Vec<f64> = batch.rewards.iter().map(|r| r * 3.0 + 1.0).collect();
    let first = learner.update_critic(&batch, &y).unwrap();
    let mut last = first;
    for _ in 0..99 {
        last = learner.update_critic(&batch, &y).unwrap();
    }
    assert!(last < first * 0.5, "{first} -> {last}");
}

#[test]
fn non_finite_critic_loss_is_an_error() {
    let mut learner = tiny_learner(tiny_config(), 9);
    let batch = random_batch(4, 9, 0);
    let before = learner.critics().to_vec();
    assert!(learner.update_critic(&batch, &[f64::NAN, 0.0, 0.0, 0.0]).is_err());
    assert_eq!(learner.critics(), &before[..]);
}

/// Independent route: `J(θ) = mean_s Q₁(s, scale · μ_θ(s))` evaluated sample
/// by sample, differentiated by central differences.
fn objective(learner_actor: &Mlp, critic: &Mlp, states: &Matrix, scale: f64) -> f64 {
    let mut total = 0.0;
    for r in 0..states.rows() {
        let s = states.row(r);
        let a = scale * learner_actor.forward(s).unwrap()[0];
        let mut input = s.to_vec();
        input.push(a);
        total += critic.forward(&input).unwrap()[0];
    }
    total / states.rows() as f64
}

#[test]
fn actor_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let learner = tiny_learner(tiny_config(), 20 + seed);
        let batch = random_batch(8, seed, 0);
        let (j, grad) = learner.actor_objective_gradient(&batch.states).unwrap();
        let critic = &learner.critics()[0];
        assert!((j - objective(learner.actor(), critic, &batch.states, 2.0)).abs() < 1e-12);
        let h = 1e-5;
        for k in 0..learner.actor().params().len() {
            let mut plus = learner.actor().clone();
            plus.params_mut().as_mut_slice()[k] += h;
            let mut minus = learner.actor().clone();
            minus.params_mut().as_mut_slice()[k] -= h;
            let fd = (objective(&plus, critic, &batch.states, 2.0) - objective(&minus, critic, &batch.states, 2.0)) / (2.0 * h);
            let e = rel_err(grad.as_slice()[k], fd);
            assert!(e < 1e-4, "seed {seed} coord {k}: {} vs {fd}", grad.as_slice()[k]);
        }
    }
}

#[test]
fn constant_critic_gives_zero_actor_gradient() {
    let cfg = AgentConfig { use_clipped_double_q: false, ..tiny_config() };
    let actor = Mlp::new(&[2, 4, 1], OutputActivation::Tanh, &mut stream(1, Stream::Init)).unwrap();
    let learner = Learner::with_networks(cfg, &tiny_spec(), actor, vec![constant_critic(3, 5.0)], 0).unwrap();
    let batch = random_batch(8, 1, 0);
    let (j, grad) = learner.actor_objective_gradient(&batch.states).unwrap();
    assert_eq!(j, 5.0);
    assert!(grad.as_slice().iter().all(|g| *g == 0.0));
}

#[test]
fn actor_objective_rises_against_frozen_critic() {
    let mut learner = tiny_learner(AgentConfig { actor_lr: 1e-3, ..tiny_config() }, 11);
    let batch = random_batch(32, 11, 0);
    let mut prev = f64::NEG_INFINITY;
    for k in 0..50 {
        let j = learner.update_actor(&batch).unwrap();
        assert!(j >= prev - 1e-12, "update {k}: {prev} -> {j}");
        prev = j;
    }
    let (last, _) = learner.actor_objective_gradient(&batch.states).unwrap();
    assert!(last >= prev);
}

#[test]
fn soft_update_arithmetic() {
    let mut learner = tiny_learner(tiny_config(), 12);
    learner.actor_target_mut().params_mut().as_mut_slice().fill(1.0);
    learner.actor_mut().params_mut().as_mut_slice().fill(0.0);
    learner.soft_update(0.005).unwrap();
    for v in learner.actor_target().params().as_slice() {
        assert!((v - 0.995).abs() < 1e-15);
    }
    learner.soft_update(1.0).unwrap();
    assert_eq!(learner.actor_target(), learner.actor());
    assert_eq!(learner.critic_targets(), learner.critics());
    assert!(learner.soft_update(0.0).is_err());
}

#[test]
fn soft_update_gap_decays_geometrically() {
    let mut learner = tiny_learner(tiny_config(), 13);
    let online = learner.critics()[0].params().as_slice().to_vec();
    learner.critic_targets_mut()[0].params_mut().as_mut_slice().iter_mut().for_each(|v| *v += 1.0);
    let tau = 0.05;
    for _ in 0..40 {
        learner.soft_update(tau).unwrap();
    }
    let expected_gap = (1.0 - tau as f64).powi(40);
    for (t, o) in learner.critic_targets()[0].params().as_slice().iter().zip(&online) {
        assert!(((t - o) - expected_gap).abs() < 1e-12);
    }
}

#[test]
fn targets_track_exponential_average_of_online_history() {
    // Scalar actor so the recursion can be replayed by hand.
    let cfg = AgentConfig { tau: 0.1, policy_delay: 1, use_clipped_double_q: false, ..tiny_config() };
    let mut learner = tiny_learner(cfg, 14);
    let mut expected = learner.actor_target().params().as_slice()[0];
    let batch = random_batch(8, 14, 0);
    for _ in 0..20 {
        learner.train_step(&batch).unwrap();
        expected = 0.9 * expected + 0.1 * learner.actor().params().as_slice()[0];
    }
    assert!((learner.actor_target().params().as_slice()[0] - expected).abs() < 1e-14);
}

#[test]
fn delayed_actor_updates() {
    let cfg = AgentConfig { policy_delay: 3, ..tiny_config() };
    let mut learner = tiny_learner(cfg, 15);
    let batch = random_batch(8, 15, 0);
    for k in 1..=20u64 {
        let stats = learner.train_step(&batch).unwrap();
        assert_eq!(stats.actor_objective.is_some(), k % 3 == 0);
        assert_eq!(learner.actor_updates(), learner.critic_updates() / 3);
    }
}

#[test]
fn learner_rejects_mismatched_networks() {
    let cfg = tiny_config();
    let actor = Mlp::zeros(&[3, 4, 1], OutputActivation::Tanh).unwrap();
    let critics = vec![constant_critic(3, 0.0), constant_critic(3, 0.0)];
    assert!(Learner::with_networks(cfg.clone(), &tiny_spec(), actor, critics.clone(), 0).is_err());
    let linear_actor = Mlp::zeros(&[2, 4, 1], OutputActivation::Identity).unwrap();
    assert!(Learner::with_networks(cfg, &tiny_spec(), linear_actor, critics, 0).is_err());
}

#[test]
fn learner_builds_for_every_environment() {
    for id in [EnvId::Pendulum, EnvId::PointMass, EnvId::Lqr] {
        let env = id.make();
        let learner = Learner::new(AgentConfig::td3(), env.spec(), 0).unwrap();
        assert_eq!(learner.critics().len(), 2);
        let a = learner.act(&env.spec().action_low.iter().map(|_| 0.0).chain(std::iter::repeat(0.0)).take(env.spec().state_dim).collect::<Vec<_>>()).unwrap();
        assert_eq!(a.len(), env.spec().action_dim);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clipped_target_never_exceeds_first_critic_target(seed in 0u64..10_000) {
        let mut learner = tiny_learner(tiny_config(), seed);
        let batch = random_batch(16, seed, 4);
        let noise = learner.draw_smoothing_noise(batch.len());
        let min = learner.bootstrap(&batch, 0.99, Some(&noise), TargetReduction::Min).unwrap();
        let first = learner.bootstrap(&batch, 0.99, Some(&noise), TargetReduction::First).unwrap();
        for (m, f) in min.iter().zip(&first) {
            prop_assert!(m <= f);
        }
    }

    #[test]
    fn smoothing_noise_stays_in_clip_range(seed in 0u64..10_000, sigma in 0.0f64..3.0, clip in 0.01f64..1.0) {
        let cfg = AgentConfig { target_policy_noise_sigma: sigma, target_noise_clip: clip, ..tiny_config() };
        let mut learner = tiny_learner(cfg, seed);
        let noise = learner.draw_smoothing_noise(64);
        for v in noise.data() {
            prop_assert!(v.abs() <= clip);
        }
    }
}
