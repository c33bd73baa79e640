use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, StepResult};
use crate::error::{check_dim, Result};

const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;

/// Inverted pendulum swing-up.
///
/// Observation `(cos θ, sin θ, θ̇)` with θ = 0 upright; torque in `[-2, 2]`.
/// Reward `-(θ² + 0.1 θ̇² + 0.001 u²)` with θ wrapped to `[-π, π)`, so every
/// step reward lies in `[-(π² + 6.4 + 0.004), 0]`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl Pendulum {
    pub fn new(max_episode_steps: usize) -> Self {
        Pendulum {
            spec: EnvSpec {
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                max_episode_steps,
                reward_range: (-(PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE), 0.0),
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    /// Place the pendulum at a given angle and angular velocity.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) -> Vec<f64> {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.observation()
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum::new(200)
    }
}

fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.theta = rng.random_range(-PI..PI);
        self.theta_dot = rng.random_range(-1.0..1.0);
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_dim("Pendulum::step action", 1, action.len())?;
        let u = action[0].clamp(-MAX_TORQUE, MAX_TORQUE);
        let th = angle_normalize(self.theta);
        let cost = th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u;

        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        self.steps += 1;

        Ok(StepResult {
            next_state: self.observation(),
            reward: -cost,
            done: false,
            truncated: self.steps >= self.spec.max_episode_steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_seeded() {
        let mut env = Pendulum::default();
        let a = env.reset(7);
        let b = env.reset(7);
        assert_eq!(a, b);
        assert_ne!(a, env.reset(8));
    }

    #[test]
    fn upright_rest_zero_torque_has_zero_reward() {
        let mut env = Pendulum::default();
        env.reset(0);
        env.set_state(0.0, 0.0);
        let r = env.step(&[0.0]).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.next_state, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn reward_formula_by_hand() {
        let mut env = Pendulum::default();
        env.set_state(0.5, -2.0);
        let r = env.step(&[1.0]).unwrap();
        assert!((r.reward + (0.25 + 0.4 + 0.001)).abs() < 1e-12);
    }

    #[test]
    fn angle_wraps() {
        assert!((angle_normalize(2.0 * PI + 0.1) - 0.1).abs() < 1e-12);
        assert!((angle_normalize(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
    }
}
