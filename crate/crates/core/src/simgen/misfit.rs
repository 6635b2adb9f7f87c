use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use serde::Serialize;

use super::latent_confounder::LatentConfounderDgp;
use crate::error::{Error, Result};
use crate::observed::Dataset;
use crate::rng::substream;
use crate::selection::Arm;
use crate::stats::{expit, ks_distance, log_sum_exp, mean, norm_logpdf, pop_variance, softplus};

pub const RESTARTS: usize = 20;
const MAX_ITERS: u64 = 4000;

/// Fit of the binary-latent-confounder model with both sensitivity
/// parameters held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisfitReport {
    pub psi_t: f64,
    pub psi_y: f64,
    pub mu: [f64; 2],
    pub sigma: f64,
    pub xi_u: f64,
    pub alpha: f64,
    pub log_likelihood: f64,
    /// KS distance between the implied and empirical `Y | T = t`.
    pub ks: [f64; 2],
}

struct Likelihood<'a> {
    y: &'a [f64],
    treated: Vec<bool>,
    psi_t: f64,
    psi_y: f64,
}

/// `(mu0, mu1, ln sigma, logit xi, alpha)`.
fn unpack(p: &[f64], psi_t: f64, psi_y: f64) -> LatentConfounderDgp {
    LatentConfounderDgp {
        xi_u: expit(p[3]).clamp(1e-12, 1.0 - 1e-12),
        alpha: p[4],
        psi_t,
        mu: [p[0], p[1]],
        psi_y,
        sigma2: (2.0 * p[2]).exp(),
    }
}

impl Likelihood<'_> {
    fn log_lik(&self, p: &[f64]) -> f64 {
        let d = unpack(p, self.psi_t, self.psi_y);
        let ln_sd = p[2];
        let sd = ln_sd.exp();
        let ln_xi = [-softplus(p[3]), -softplus(-p[3])];
        // ln P(T = 1 | U = u) and ln P(T = 0 | U = u)
        let ln_t = |u: usize, treated: bool| {
            let eta = d.alpha + d.psi_t * u as f64;
            if treated {
                -softplus(-eta)
            } else {
                -softplus(eta)
            }
        };
        self.y
            .iter()
            .zip(&self.treated)
            .map(|(&y, &tr)| {
                let m = d.mu[usize::from(tr)];
                let terms = [0usize, 1]
                    .map(|u| ln_xi[u] + ln_t(u, tr) + norm_logpdf((y - m - d.psi_y * u as f64) / sd) - ln_sd);
                log_sum_exp(&terms)
            })
            .sum()
    }
}

impl CostFunction for Likelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = -self.log_lik(p);
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

/// Maximum-likelihood fit of the remaining parameters at fixed
/// `(psi_t, psi_y)` by Nelder-Mead from [`RESTARTS`] seeded starts; the
/// best likelihood wins.
pub fn misfit_demo(data: &Dataset, psi_t: f64, psi_y: f64, seed: u64) -> Result<MisfitReport> {
    for arm in Arm::BOTH {
        if data.arm_count(arm) < 2 {
            return Err(Error::EmptyStratum(format!("arm {} has fewer than 2 units", arm.index())));
        }
    }
    let arm_y = [data.arm_outcomes(Arm::Control), data.arm_outcomes(Arm::Treated)];
    let sd_all = pop_variance(data.y()).sqrt().max(1e-6);
    let cost = Likelihood { y: data.y(), treated: data.t().iter().map(|a| *a == Arm::Treated).collect(), psi_t, psi_y };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..RESTARTS {
        let mut rng = substream(seed, r as u64);
        let start: Vec<f64> = vec![
            mean(&arm_y[0]) - 0.5 * psi_y + rng.random_range(-0.5..0.5) * sd_all,
            mean(&arm_y[1]) - 0.5 * psi_y + rng.random_range(-0.5..0.5) * sd_all,
            (sd_all * rng.random_range(0.3..1.0)).ln(),
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.0..1.0),
        ];
        let scales = [0.5 * sd_all, 0.5 * sd_all, 0.3, 0.8, 0.5];
        let mut simplex = vec![start.clone()];
        for (k, s) in scales.iter().enumerate() {
            let mut v = start.clone();
            v[k] += s;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-10).map_err(|e| Error::Optimizer(e.to_string()))?;
        let res = Executor::new(&cost, solver)
            .configure(|s| s.max_iters(MAX_ITERS))
            .run()
            .map_err(|e| Error::Optimizer(e.to_string()))?;
        let state = res.state();
        if let Some(p) = state.best_param.clone() {
            let c = state.best_cost;
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, p));
            }
        }
    }
    let (c, p) = best.ok_or_else(|| Error::Optimizer("no restart produced a parameter".into()))?;
    let d = unpack(&p, psi_t, psi_y);
    let ks = Arm::BOTH.map(|a| {
        let implied = d.conditional(a, a);
        ks_distance(&arm_y[a.index()], |y| implied.cdf(y))
    });
    Ok(MisfitReport {
        psi_t,
        psi_y,
        mu: d.mu,
        sigma: d.sigma2.sqrt(),
        xi_u: d.xi_u,
        alpha: d.alpha,
        log_likelihood: -c,
        ks,
    })
}

impl CostFunction for &Likelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        (*self).cost(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::gen_latent_confounder;

    #[test]
    fn empty_arm_rejected() {
        let d = Dataset::bare(vec![1.0, 2.0, 3.0], vec![Arm::Control; 3]).unwrap();
        assert!(matches!(misfit_demo(&d, 0.0, 0.0, 1), Err(Error::EmptyStratum(_))));
    }

    #[test]
    fn truth_fits_and_zero_misfits() {
        let dgp = LatentConfounderDgp::default();
        let s = gen_latent_confounder(&dgp, 5000, 17).unwrap();
        let right = misfit_demo(&s.data, dgp.psi_t, dgp.psi_y, 2).unwrap();
        assert!(right.ks.iter().all(|&k| k < 0.02), "{right:?}");
        let wrong = misfit_demo(&s.data, 0.0, 0.0, 2).unwrap();
        assert!(wrong.ks.iter().all(|&k| k > 0.05), "{wrong:?}");
    }
}
