use std::f64::consts::PI;
use std::fmt;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::z_score;
use crate::error::{Error, Result};
use crate::rng;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasEstimate {
    pub sigma: f64,
    pub v_star: f64,
    pub samples: usize,
    /// `Q₂` was set equal to `Q₁` instead of drawn independently.
    pub correlated: bool,
    pub mc_mean_of_min: f64,
    pub mc_stderr: f64,
    /// `v_star − sigma / √π`, or `v_star` when correlated.
    pub analytic_prediction: f64,
}

impl BiasEstimate {
    pub fn z_score(&self) -> f64 {
        z_score(self.mc_mean_of_min, self.analytic_prediction, self.mc_stderr)
    }

    /// `mean(min) − v_star`.
    pub fn bias(&self) -> f64 {
        self.mc_mean_of_min - self.v_star
    }

    pub fn csv_header() -> &'static str {
        "sigma,v_star,mc_mean,analytic,z_score"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.sigma,
            self.v_star,
            self.mc_mean_of_min,
            self.analytic_prediction,
            self.z_score()
        )
    }
}

impl fmt::Display for BiasEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sigma={} v*={} {}: E[min] = {:.6} ± {:.6} (analytic {:.6}, z {:+.2})",
            self.sigma,
            self.v_star,
            if self.correlated { "Q1==Q2" } else { "independent" },
            self.mc_mean_of_min,
            self.mc_stderr,
            self.analytic_prediction,
            self.z_score()
        )
    }
}

/// Monte Carlo mean of `min(Q₁, Q₂)` with `Q₁, Q₂ ~ N(v_star, sigma²)`
/// independent, or `Q₂ = Q₁` when `correlated`. Work is chunked with one
/// stream per chunk and chunk sums are merged in order.
pub fn clipped_double_q_bias_mc(
    v_star: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
    correlated: bool,
) -> Result<BiasEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    if samples < 10_000 {
        return Err(Error::invalid("samples", "need at least 10^4"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::indexed(seed, c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..len {
                let x1: f64 = rng.sample(StandardNormal);
                let x2: f64 = if correlated { x1 } else { rng.sample(StandardNormal) };
                // Centered at v_star to keep the variance accumulation well conditioned.
                let m = sigma * x1.min(x2);
                s += m;
                ss += m * m;
            }
            (s, ss)
        })
        .collect();
    let (s, ss) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, ss)| (a + s, b + ss));
    let n = samples as f64;
    let mean_dev = s / n;
    let var = ((ss - s * s / n) / (n - 1.0)).max(0.0);
    Ok(BiasEstimate {
        sigma,
        v_star,
        samples,
        correlated,
        mc_mean_of_min: v_star + mean_dev,
        mc_stderr: (var / n).sqrt(),
        analytic_prediction: if correlated { v_star } else { v_star - sigma / PI.sqrt() },
    })
}
