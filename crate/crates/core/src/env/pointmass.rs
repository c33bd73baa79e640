use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, StepResult};
use crate::error::{check_dim, Result};

const DT: f64 = 0.1;
const MAX_SPEED: f64 = 1.0;
const ARENA: f64 = 2.0;
const GOAL_RADIUS: f64 = 0.05;

/// Planar point mass steered toward the origin.
///
/// Observation `(x, y, vx, vy)`: offset from the goal and velocity. Actions
/// are accelerations in `[-1, 1]²`. Reward `-(|p| + 0.01 |a|²)`; the episode
/// terminates once the mass sits inside the goal radius and is nearly at rest.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    pos: [f64; 2],
    vel: [f64; 2],
    steps: usize,
}

impl PointMass {
    pub fn new(max_episode_steps: usize) -> Self {
        PointMass {
            spec: EnvSpec {
                state_dim: 4,
                action_dim: 2,
                action_low: vec![-1.0, -1.0],
                action_high: vec![1.0, 1.0],
                max_episode_steps,
                reward_range: (-(ARENA * 2f64.sqrt() + 0.02), 0.0),
            },
            pos: [0.0; 2],
            vel: [0.0; 2],
            steps: 0,
        }
    }

    pub fn goal_distance(&self) -> f64 {
        self.pos[0].hypot(self.pos[1])
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }
}

impl Default for PointMass {
    fn default() -> Self {
        PointMass::new(100)
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = rng.random_range(0.5..1.0);
        let angle = rng.random_range(-PI..PI);
        self.pos = [radius * angle.cos(), radius * angle.sin()];
        self.vel = [0.0; 2];
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_dim("PointMass::step action", 2, action.len())?;
        let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
        for k in 0..2 {
            self.vel[k] = (self.vel[k] + a[k] * DT).clamp(-MAX_SPEED, MAX_SPEED);
            self.pos[k] = (self.pos[k] + self.vel[k] * DT).clamp(-ARENA, ARENA);
        }
        self.steps += 1;
        let dist = self.goal_distance();
        let reward = -(dist + 0.01 * (a[0] * a[0] + a[1] * a[1]));
        let done = dist < GOAL_RADIUS && self.vel[0].hypot(self.vel[1]) < 0.1;
        Ok(StepResult {
            next_state: self.observation(),
            reward,
            done,
            truncated: !done && self.steps >= self.spec.max_episode_steps,
        })
    }
}
