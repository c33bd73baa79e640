//! Desk-scale continuous-control environments.

mod lqr;
mod pendulum;
mod pointmass;

use std::fmt;
use std::str::FromStr;

pub use lqr::{lqr_optimal_value, LqrEnv, RiccatiSolution};
pub use pendulum::Pendulum;
pub use pointmass::PointMass;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
    /// Inclusive per-step reward bounds.
    pub reward_range: (f64, f64),
}

impl EnvSpec {
    pub fn action_mid(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Half-width of the action box per component.
    pub fn action_scale(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    pub fn clip_action(&self, action: &mut [f64]) {
        for ((a, l), h) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(*l, *h);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// Terminal dynamics; bootstrapping stops.
    pub done: bool,
    /// Step limit reached; the episode ends but the value still bootstraps.
    pub truncated: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Start a new episode drawn from the initial-state distribution under `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    Pendulum,
    PointMass,
    Lqr,
}

impl EnvId {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::Pendulum => "pendulum",
            EnvId::PointMass => "pointmass",
            EnvId::Lqr => "lqr",
        }
    }

    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvId::Pendulum => Box::new(Pendulum::default()),
            EnvId::PointMass => Box::new(PointMass::default()),
            EnvId::Lqr => Box::new(LqrEnv::default()),
        }
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvId::Pendulum),
            "pointmass" => Ok(EnvId::PointMass),
            "lqr" => Ok(EnvId::Lqr),
            other => Err(Error::UnknownEnvironment(other.to_string())),
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
