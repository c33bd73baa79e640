//! Deterministic policy gradient learners (DDPG, TD3) with streaming and
//! regularly updated training schedules, desk-scale control environments,
//! an instrumented replay buffer, and exact/Monte Carlo replay-count and
//! clipped-double-Q bias analysis.

pub mod agents;
pub mod analysis;
pub mod env;
pub mod error;
pub mod replay;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{AdamState, Matrix, Mlp, OutputActivation, ParameterVector};
