//! Ornstein-Uhlenbeck exploration noise: mean-reverting to zero, so action
//! perturbations are temporally correlated, which suits inertial control.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct OuNoise {
    theta: f64,
    sigma: f64,
    x: f64,
}

impl OuNoise {
    pub fn new(theta: f64, sigma: f64) -> Self {
        Self { theta, sigma, x: 0.0 }
    }

    pub fn reset(&mut self) {
        self.x = 0.0;
    }

    /// Scales the diffusion term, for optional exploration decay.
    pub fn scale_sigma(&mut self, factor: f64) {
        self.sigma *= factor;
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> f64 {
        let gauss: f64 = StandardNormal.sample(rng);
        self.x += self.theta * (0.0 - self.x) + self.sigma * gauss;
        self.x
    }
}
