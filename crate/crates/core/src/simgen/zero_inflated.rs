use rand::Rng;

use super::{check_n, Simulated, Truth};
use crate::ef::{MixtureDist, Support, UnivariateEF};
use crate::error::Result;
use crate::observed::Dataset;
use crate::rng::seeded;
use crate::selection::{Arm, LogisticSelection, SelectionSpec};

/// Semi-continuous outcome built directly from its factorization: the
/// observed arm-`t` law is a zero atom (unemployment) plus a lognormal
/// mixture, and the law among the other arm's units follows from the
/// logistic selection `(gamma, omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroInflatedDgp {
    pub p1: f64,
    /// `P(W(t) = 1 | T = t)`.
    pub employment: [f64; 2],
    /// `(weights, means, sds)` of log income given employment.
    pub log_income: [(Vec<f64>, Vec<f64>, Vec<f64>); 2],
    pub gamma: [f64; 2],
    pub omega: [f64; 2],
}

impl Default for ZeroInflatedDgp {
    fn default() -> Self {
        Self {
            p1: 0.5,
            employment: [0.6, 0.7],
            log_income: [
                (vec![0.6, 0.4], vec![2.0, 3.0], vec![0.6, 0.5]),
                (vec![0.6, 0.4], vec![2.2, 3.1], vec![0.6, 0.5]),
            ],
            gamma: [0.0, 0.0],
            omega: [0.5, 0.5],
        }
    }
}

impl ZeroInflatedDgp {
    pub fn selection(&self) -> SelectionSpec {
        SelectionSpec::Logistic(
            LogisticSelection::linear(self.gamma[0], self.gamma[1]).with_zero_shift(self.omega[0], self.omega[1]),
        )
    }

    pub fn observed(&self, arm: Arm) -> Result<MixtureDist> {
        let (w, m, s) = &self.log_income[arm.index()];
        let comps = m.iter().zip(s).map(|(&m, &s)| UnivariateEF::normal(m, s * s)).collect::<Result<Vec<_>>>()?;
        let atom = 1.0 - self.employment[arm.index()];
        MixtureDist::with_zero_atom(comps, w.clone(), atom, Support::Log)
    }

    pub fn missing(&self, arm: Arm) -> Result<MixtureDist> {
        self.selection().missing(&self.observed(arm)?, arm)
    }
}

pub fn gen_zero_inflated(dgp: &ZeroInflatedDgp, n: usize, seed: u64) -> Result<Simulated> {
    check_n(n)?;
    let obs = [dgp.observed(Arm::Control)?, dgp.observed(Arm::Treated)?];
    let mis = [dgp.missing(Arm::Control)?, dgp.missing(Arm::Treated)?];
    let mut rng = seeded(seed);
    let (mut y, mut t, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut truth = Truth { u: Vec::with_capacity(n), y0: Vec::with_capacity(n), y1: Vec::with_capacity(n) };
    for _ in 0..n {
        let arm = if rng.random::<f64>() < dgp.p1 { Arm::Treated } else { Arm::Control };
        let own = obs[arm.index()].sample(&mut rng);
        let other = mis[arm.other().index()].sample(&mut rng);
        let (y0, y1) = if arm == Arm::Treated { (other, own) } else { (own, other) };
        y.push(own);
        w.push(own > 0.0);
        t.push(arm);
        truth.u.push(if own > 0.0 { 1.0 } else { 0.0 });
        truth.y0.push(y0);
        truth.y1.push(y1);
    }
    let data = Dataset::new(y, t, vec![Vec::new(); n], Some(w), Vec::new())?;
    Ok(Simulated { data, truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_exactly_the_unemployed() {
        let s = gen_zero_inflated(&ZeroInflatedDgp::default(), 2000, 5).unwrap();
        let w = s.data.w().unwrap();
        let zeros = s.data.y().iter().filter(|&&y| y == 0.0).count();
        assert_eq!(zeros, w.iter().filter(|&&e| !e).count());
    }
}
