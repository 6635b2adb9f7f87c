use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_n, Simulated, Truth};
use crate::error::{Error, Result};
use crate::observed::Dataset;
use crate::rng::seeded;
use crate::selection::{Arm, LatentClassSelection};
use crate::stats::expit;

/// Two latent classes shared by both arms:
/// `T ~ Bern(p1)`, `X | T ~ N(x_mean[T], 1)`,
/// `U(1) | X, T ~ Bern(expit(beta X + omega1 T + tau))`,
/// `U(0) | X, T ~ Bern(expit(beta X + omega0 T))`,
/// `Y(t) | U(t) = k ~ N(mean_k, sd_k^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentClassDgp {
    pub p1: f64,
    pub x_mean: [f64; 2],
    pub beta: f64,
    pub omega: [f64; 2],
    pub tau: f64,
    /// `(mean, sd)` of class 0 and class 1.
    pub classes: [(f64, f64); 2],
}

impl Default for LatentClassDgp {
    fn default() -> Self {
        Self { p1: 0.5, x_mean: [1.0, -1.0], beta: 1.0, omega: [1.0, 1.0], tau: 0.0, classes: [(0.0, 1.0), (5.0, 2.0)] }
    }
}

impl LatentClassDgp {
    /// Sensitivity point at which the analysis model reproduces this
    /// generator. The analysis parameter shifts the log odds of the
    /// lower class from observed to missing units, so the treated arm's
    /// sign flips.
    pub fn analysis_selection(&self) -> LatentClassSelection {
        LatentClassSelection::finite(self.omega[0], -self.omega[1])
    }

    fn class_one_probability(&self, t: Arm, x: f64, treated: bool) -> f64 {
        let shift = if treated { self.omega[t.index()] } else { 0.0 };
        let tau = if t == Arm::Treated { self.tau } else { 0.0 };
        expit(self.beta * x + shift + tau)
    }
}

pub fn gen_latent_class(dgp: &LatentClassDgp, n: usize, seed: u64) -> Result<Simulated> {
    check_n(n)?;
    if dgp.classes.iter().any(|&(_, sd)| !(sd > 0.0)) {
        return Err(Error::invalid("class sds must be positive"));
    }
    if !(dgp.p1 > 0.0 && dgp.p1 < 1.0) {
        return Err(Error::invalid(format!("p1 = {} outside (0, 1)", dgp.p1)));
    }
    let mut rng = seeded(seed);
    let (mut y, mut t, mut x) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut truth = Truth { u: Vec::with_capacity(n), y0: Vec::with_capacity(n), y1: Vec::with_capacity(n) };
    for _ in 0..n {
        let treated = rng.random::<f64>() < dgp.p1;
        let arm = if treated { Arm::Treated } else { Arm::Control };
        let z: f64 = StandardNormal.sample(&mut rng);
        let xi = dgp.x_mean[arm.index()] + z;
        // one uniform and one noise draw drive both arms
        let v: f64 = rng.random();
        let e: f64 = StandardNormal.sample(&mut rng);
        let mut po = [0.0; 2];
        let mut class = [0.0; 2];
        for a in Arm::BOTH {
            let k = usize::from(v < dgp.class_one_probability(a, xi, treated));
            let (m, sd) = dgp.classes[k];
            po[a.index()] = m + sd * e;
            class[a.index()] = k as f64;
        }
        y.push(po[arm.index()]);
        t.push(arm);
        x.push(vec![xi]);
        truth.u.push(class[arm.index()]);
        truth.y0.push(po[0]);
        truth.y1.push(po[1]);
    }
    let data = Dataset::new(y, t, x, None, vec!["x".into()])?;
    Ok(Simulated { data, truth })
}
