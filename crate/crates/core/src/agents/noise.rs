use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;

/// Exploration noise in normalized action units.
pub trait NoiseProcess: Send {
    fn sample(&mut self, rng: &mut Rng) -> Vec<f64>;

    /// Called at every episode boundary.
    fn reset(&mut self) {}
}

#[derive(Debug, Clone)]
pub struct GaussianNoise {
    pub sigma: f64,
    pub dim: usize,
}

impl NoiseProcess for GaussianNoise {
    fn sample(&mut self, rng: &mut Rng) -> Vec<f64> {
        (0..self.dim)
            .map(|_| self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Euler-discretized Ornstein-Uhlenbeck process around zero:
/// `x ← x − θ x dt + σ √dt ξ`.
#[derive(Debug, Clone)]
pub struct OuNoiseState {
    pub current: Vec<f64>,
    pub theta_ou: f64,
    pub sigma_ou: f64,
    pub dt: f64,
}

impl OuNoiseState {
    pub fn new(dim: usize, theta_ou: f64, sigma_ou: f64, dt: f64) -> Self {
        OuNoiseState {
            current: vec![0.0; dim],
            theta_ou,
            sigma_ou,
            dt,
        }
    }
}

impl NoiseProcess for OuNoiseState {
    fn sample(&mut self, rng: &mut Rng) -> Vec<f64> {
        let sqrt_dt = self.dt.sqrt();
        for x in &mut self.current {
            let xi: f64 = rng.sample(StandardNormal);
            *x += -self.theta_ou * *x * self.dt + self.sigma_ou * sqrt_dt * xi;
        }
        self.current.clone()
    }

    fn reset(&mut self) {
        self.current.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Streaming Pearson correlation of consecutive samples.
#[derive(Debug, Clone, Default)]
pub struct Lag1Autocorrelation {
    prev: Option<f64>,
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Lag1Autocorrelation {
    pub fn push(&mut self, x: f64) {
        if let Some(p) = self.prev {
            self.n += 1.0;
            self.sx += p;
            self.sy += x;
            self.sxx += p * p;
            self.syy += x * x;
            self.sxy += p * x;
        }
        self.prev = Some(x);
    }

    /// Forget the previous sample so pairs never straddle an episode boundary.
    pub fn break_sequence(&mut self) {
        self.prev = None;
    }

    pub fn value(&self) -> Option<f64> {
        if self.n < 2.0 {
            return None;
        }
        let cov = self.sxy / self.n - (self.sx / self.n) * (self.sy / self.n);
        let vx = self.sxx / self.n - (self.sx / self.n).powi(2);
        let vy = self.syy / self.n - (self.sy / self.n).powi(2);
        if vx <= 0.0 || vy <= 0.0 {
            return None;
        }
        Some(cov / (vx * vy).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn ou_is_positively_autocorrelated_and_gaussian_is_not() {
        let mut rng = stream(0, Stream::Exploration);
        let mut ou = OuNoiseState::new(1, 0.15, 0.2, 1e-2);
        let mut gauss = GaussianNoise { sigma: 0.1, dim: 1 };
        let (mut a_ou, mut a_g) = (Lag1Autocorrelation::default(), Lag1Autocorrelation::default());
        for _ in 0..20_000 {
            a_ou.push(ou.sample(&mut rng)[0]);
            a_g.push(gauss.sample(&mut rng)[0]);
        }
        assert!(a_ou.value().unwrap() > 0.9);
        assert!(a_g.value().unwrap().abs() < 0.05);
    }

    #[test]
    fn ou_reset_zeroes_state() {
        let mut rng = stream(1, Stream::Exploration);
        let mut ou = OuNoiseState::new(2, 0.15, 0.2, 1e-2);
        ou.sample(&mut rng);
        ou.reset();
        assert_eq!(ou.current, vec![0.0, 0.0]);
    }
}
