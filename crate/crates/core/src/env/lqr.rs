use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, StepResult};
use crate::error::{check_dim, Error, Result};
use crate::tensor::Matrix;

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITER: usize = 10_000;

/// Linear dynamics `x' = A x + B u` with reward `-(xᵀQx + uᵀRu)`.
///
/// States are clamped to `[-state_bound, state_bound]` after each step, which
/// bounds the per-step reward; inside the box the dynamics are exactly linear.
#[derive(Debug, Clone)]
pub struct LqrEnv {
    spec: EnvSpec,
    a: Matrix,
    b: Matrix,
    q: Matrix,
    r: Matrix,
    init_bound: f64,
    state_bound: f64,
    state: Vec<f64>,
    steps: usize,
}

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Value matrix: `V*(x) = -xᵀPx`.
    pub p: Matrix,
    /// Optimal feedback `u = -K x`.
    pub gain: Matrix,
    pub iterations: usize,
}

impl LqrEnv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix,
        b: Matrix,
        q: Matrix,
        r: Matrix,
        action_bound: f64,
        init_bound: f64,
        state_bound: f64,
        max_episode_steps: usize,
    ) -> Result<Self> {
        let n = a.rows();
        let m = b.cols();
        check_dim("LqrEnv A cols", n, a.cols())?;
        check_dim("LqrEnv B rows", n, b.rows())?;
        check_dim("LqrEnv Q rows", n, q.rows())?;
        check_dim("LqrEnv Q cols", n, q.cols())?;
        check_dim("LqrEnv R rows", m, r.rows())?;
        check_dim("LqrEnv R cols", m, r.cols())?;
        if !(action_bound > 0.0 && init_bound > 0.0 && state_bound >= init_bound) {
            return Err(Error::invalid("LqrEnv bounds", "need 0 < init_bound <= state_bound and action_bound > 0"));
        }
        let max_cost = n as f64 * q.max_abs() * n as f64 * state_bound * state_bound
            + m as f64 * r.max_abs() * m as f64 * action_bound * action_bound;
        Ok(LqrEnv {
            spec: EnvSpec {
                state_dim: n,
                action_dim: m,
                action_low: vec![-action_bound; m],
                action_high: vec![action_bound; m],
                max_episode_steps,
                reward_range: (-max_cost, 0.0),
            },
            a,
            b,
            q,
            r,
            init_bound,
            state_bound,
            state: vec![0.0; n],
            steps: 0,
        })
    }

    pub fn set_state(&mut self, state: &[f64]) -> Result<()> {
        check_dim("LqrEnv::set_state", self.spec.state_dim, state.len())?;
        self.state = state.to_vec();
        Ok(())
    }

    pub fn init_bound(&self) -> f64 {
        self.init_bound
    }

    /// Discounted DARE by fixed-point iteration from `P = Q`:
    /// `P ← Q + γAᵀPA − γ²AᵀPB (R + γBᵀPB)⁻¹ BᵀPA`.
    pub fn riccati(&self, gamma: f64) -> Result<RiccatiSolution> {
        let at = self.a.transpose();
        let bt = self.b.transpose();
        let mut p = self.q.clone();
        let mut last_change = f64::INFINITY;
        for iter in 1..=RICCATI_MAX_ITER {
            let pa = p.matmul(&self.a)?;
            let pb = p.matmul(&self.b)?;
            let inner = self.r.add(&bt.matmul(&pb)?.scale(gamma))?.inverse()?;
            let correction = at.matmul(&pb)?.matmul(&inner)?.matmul(&bt.matmul(&pa)?)?;
            let next = self
                .q
                .add(&at.matmul(&pa)?.scale(gamma))?
                .sub(&correction.scale(gamma * gamma))?;
            last_change = next.sub(&p)?.max_abs();
            if !last_change.is_finite() {
                break;
            }
            p = next;
            if last_change < RICCATI_TOL {
                let pb = p.matmul(&self.b)?;
                let inner = self.r.add(&bt.matmul(&pb)?.scale(gamma))?.inverse()?;
                let gain = inner.matmul(&bt.matmul(&p.matmul(&self.a)?)?)?.scale(gamma);
                return Ok(RiccatiSolution {
                    p,
                    gain,
                    iterations: iter,
                });
            }
        }
        Err(Error::RiccatiDiverged {
            iterations: RICCATI_MAX_ITER,
            last_change,
        })
    }
}

/// `V*(s) = -sᵀPs` for the discounted problem.
pub fn lqr_optimal_value(env: &LqrEnv, state: &[f64], gamma: f64) -> Result<f64> {
    check_dim("lqr_optimal_value state", env.spec.state_dim, state.len())?;
    let sol = env.riccati(gamma)?;
    Ok(-sol.p.quadratic_form(state)?)
}

impl Default for LqrEnv {
    /// Discretized double integrator, `dt = 0.1`.
    fn default() -> Self {
        let a = Matrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).expect("static");
        let b = Matrix::from_rows(&[vec![0.005], vec![0.1]]).expect("static");
        LqrEnv::new(a, b, Matrix::identity(2), Matrix::diagonal(&[0.1]), 10.0, 1.0, 10.0, 100)
            .expect("static configuration is valid")
    }
}

impl Environment for LqrEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = (0..self.spec.state_dim)
            .map(|_| rng.random_range(-self.init_bound..=self.init_bound))
            .collect();
        self.steps = 0;
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_dim("LqrEnv::step action", self.spec.action_dim, action.len())?;
        let mut u = action.to_vec();
        self.spec.clip_action(&mut u);
        let reward = -(self.q.quadratic_form(&self.state)? + self.r.quadratic_form(&u)?);
        let ax = self.a.mul_vec(&self.state)?;
        let bu = self.b.mul_vec(&u)?;
        self.state = ax
            .iter()
            .zip(&bu)
            .map(|(x, y)| (x + y).clamp(-self.state_bound, self.state_bound))
            .collect();
        self.steps += 1;
        Ok(StepResult {
            next_state: self.state.clone(),
            reward,
            done: false,
            truncated: self.steps >= self.spec.max_episode_steps,
        })
    }
}
