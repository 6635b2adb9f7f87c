use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_n, Simulated, Truth};
use crate::ef::{MixtureDist, UnivariateEF};
use crate::error::{Error, Result};
use crate::observed::Dataset;
use crate::rng::seeded;
use crate::selection::Arm;
use crate::stats::expit;

/// Binary latent confounder with Normal outcomes:
/// `U ~ Bern(xi_u)`, `T | U ~ Bern(expit(alpha + psi_t U))`,
/// `Y(t) | U ~ N(mu_t + psi_y U, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentConfounderDgp {
    pub xi_u: f64,
    pub alpha: f64,
    pub psi_t: f64,
    pub mu: [f64; 2],
    pub psi_y: f64,
    pub sigma2: f64,
}

impl Default for LatentConfounderDgp {
    fn default() -> Self {
        Self { xi_u: 0.5, alpha: 0.0, psi_t: -1.0, mu: [0.0, 0.0], psi_y: 5.0, sigma2: 1.0 }
    }
}

impl LatentConfounderDgp {
    fn validate(&self) -> Result<()> {
        if !(self.xi_u > 0.0 && self.xi_u < 1.0) {
            return Err(Error::invalid(format!("xi_u = {} outside (0, 1)", self.xi_u)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::invalid(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        Ok(())
    }

    pub fn treated_probability(&self) -> f64 {
        self.xi_u * expit(self.alpha + self.psi_t) + (1.0 - self.xi_u) * expit(self.alpha)
    }

    /// `P(U = 1 | T = arm)` by Bayes' rule.
    pub fn h(&self, arm: Arm) -> f64 {
        let (p_u1, p_u0) = (expit(self.alpha + self.psi_t), expit(self.alpha));
        let (a, b) = match arm {
            Arm::Treated => (p_u1, p_u0),
            Arm::Control => (1.0 - p_u1, 1.0 - p_u0),
        };
        self.xi_u * a / (self.xi_u * a + (1.0 - self.xi_u) * b)
    }

    /// Distribution of `Y(t) | T = given`.
    pub fn conditional(&self, t: Arm, given: Arm) -> MixtureDist {
        let h = self.h(given);
        let m = self.mu[t.index()];
        let comps = vec![
            UnivariateEF::normal(m, self.sigma2).expect("validated variance"),
            UnivariateEF::normal(m + self.psi_y, self.sigma2).expect("validated variance"),
        ];
        MixtureDist::new(comps, vec![1.0 - h, h]).expect("weights in (0, 1)")
    }
}

pub fn gen_latent_confounder(dgp: &LatentConfounderDgp, n: usize, seed: u64) -> Result<Simulated> {
    check_n(n)?;
    dgp.validate()?;
    let mut rng = seeded(seed);
    let sd = dgp.sigma2.sqrt();
    let (mut y, mut t) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut truth = Truth { u: Vec::with_capacity(n), y0: Vec::with_capacity(n), y1: Vec::with_capacity(n) };
    for _ in 0..n {
        let u = if rng.random::<f64>() < dgp.xi_u { 1.0 } else { 0.0 };
        let arm = if rng.random::<f64>() < expit(dgp.alpha + dgp.psi_t * u) { Arm::Treated } else { Arm::Control };
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        let y0 = dgp.mu[0] + dgp.psi_y * u + sd * z0;
        let y1 = dgp.mu[1] + dgp.psi_y * u + sd * z1;
        y.push(if arm == Arm::Treated { y1 } else { y0 });
        t.push(arm);
        truth.u.push(u);
        truth.y0.push(y0);
        truth.y1.push(y1);
    }
    Ok(Simulated { data: Dataset::bare(y, t)?, truth })
}
