//! Two-class Normal mixture whose class weight is logistic in the
//! covariates: `f(y | x) = pi(x) f_0(y) + (1 - pi(x)) f_1(y)` with
//! `logit pi(x) = b_0 + b'x`. Class 0 is the lower-mean component.

use nalgebra::{DMatrix, DVector};

use super::em::{em_fit, VAR_FLOOR};
use crate::ef::{MixtureDist, UnivariateEF};
use crate::error::{Error, Result};
use crate::stats::{expit, log_sum_exp, pop_variance};

const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-8;
const RIDGE: f64 = 1e-8;
const GATE_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GatedFit {
    pub components: [UnivariateEF; 2],
    /// Intercept followed by one coefficient per covariate.
    pub gate: Vec<f64>,
}

impl GatedFit {
    pub fn class0_weight(&self, x: &[f64]) -> f64 {
        expit(self.gate[0] + self.gate[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    pub fn unit_mixture(&self, x: &[f64]) -> Result<MixtureDist> {
        let p = self.class0_weight(x).clamp(1e-300, 1.0 - 1e-16);
        MixtureDist::new(self.components.to_vec(), vec![p, 1.0 - p])
    }

    pub fn log_likelihood(&self, ys: &[f64], xs: &[Vec<f64>]) -> f64 {
        ys.iter()
            .zip(xs)
            .map(|(&y, x)| {
                let p = self.class0_weight(x);
                log_sum_exp(&[
                    p.ln() + self.components[0].log_density(y),
                    (1.0 - p).ln() + self.components[1].log_density(y),
                ])
            })
            .sum()
    }
}

pub fn fit_gated(ys: &[f64], xs: &[Vec<f64>], restarts: usize, seed: u64) -> Result<GatedFit> {
    check_inputs(ys, xs)?;
    let pooled = em_fit(ys, 2, restarts, seed)?;
    let p = xs.first().map_or(0, Vec::len);
    let mut gate = vec![0.0; p + 1];
    gate[0] = crate::stats::logit(pooled.continuous_weights()[0]);
    let init = GatedFit { components: [pooled.components()[0], pooled.components()[1]], gate };
    run(ys, xs, init)
}

pub fn refit_gated(ys: &[f64], xs: &[Vec<f64>], warm: &GatedFit) -> Result<GatedFit> {
    check_inputs(ys, xs)?;
    run(ys, xs, warm.clone())
}

fn check_inputs(ys: &[f64], xs: &[Vec<f64>]) -> Result<()> {
    if ys.len() != xs.len() {
        return Err(Error::invalid("outcome and covariate rows differ in length"));
    }
    if ys.len() < 10 {
        return Err(Error::invalid(format!("need n >= 10 samples, got {}", ys.len())));
    }
    Ok(())
}

fn run(ys: &[f64], xs: &[Vec<f64>], mut fit: GatedFit) -> Result<GatedFit> {
    let n = ys.len();
    let dim = fit.gate.len();
    let floor = VAR_FLOOR * pop_variance(ys);
    let design = DMatrix::from_fn(n, dim, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1] });
    let mut resp = vec![0.0; n];
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..MAX_ITER {
        let mut ll = 0.0;
        for i in 0..n {
            let p = fit.class0_weight(&xs[i]);
            let a = p.ln() + fit.components[0].log_density(ys[i]);
            let b = (1.0 - p).ln() + fit.components[1].log_density(ys[i]);
            let lse = log_sum_exp(&[a, b]);
            ll += lse;
            resp[i] = (a - lse).exp();
        }
        if (ll - prev).abs() <= REL_TOL * ll.abs() {
            break;
        }
        prev = ll;
        fit.components = [
            weighted_normal(ys, resp.iter().copied(), floor)?,
            weighted_normal(ys, resp.iter().map(|r| 1.0 - r), floor)?,
        ];
        update_gate(&design, &resp, &mut fit.gate)?;
    }
    if fit.components[0].mean() > fit.components[1].mean() {
        fit.components.swap(0, 1);
        fit.gate.iter_mut().for_each(|b| *b = -*b);
    }
    let avg: f64 = xs.iter().map(|x| fit.class0_weight(x)).sum::<f64>() / n as f64;
    let floor_w = 1.0 / (10.0 * n as f64);
    let smaller = avg.min(1.0 - avg);
    if smaller < floor_w {
        return Err(Error::DegenerateFit { weight: smaller, floor: floor_w });
    }
    Ok(fit)
}

fn weighted_normal(ys: &[f64], w: impl Iterator<Item = f64> + Clone, floor: f64) -> Result<UnivariateEF> {
    let (mut sw, mut sy) = (0.0, 0.0);
    for (r, y) in w.clone().zip(ys) {
        sw += r;
        sy += r * y;
    }
    if !(sw > 0.0) {
        return Err(Error::DegenerateFit { weight: 0.0, floor: 1.0 / (10.0 * ys.len() as f64) });
    }
    let m = sy / sw;
    let ss: f64 = w.zip(ys).map(|(r, y)| r * (y - m).powi(2)).sum();
    UnivariateEF::normal(m, (ss / sw).max(floor))
}

/// Newton steps on the soft-label logistic likelihood.
fn update_gate(design: &DMatrix<f64>, resp: &[f64], gate: &mut [f64]) -> Result<()> {
    let dim = gate.len();
    for _ in 0..GATE_STEPS {
        let beta = DVector::from_column_slice(gate);
        let eta = design * &beta;
        let p = eta.map(expit);
        let wts = p.map(|v| (v * (1.0 - v)).max(1e-12));
        let grad = design.transpose() * (DVector::from_column_slice(resp) - &p);
        let mut hess = DMatrix::zeros(dim, dim);
        for (i, row) in design.row_iter().enumerate() {
            hess += row.transpose() * row * wts[i];
        }
        for j in 0..dim {
            hess[(j, j)] += RIDGE;
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Optimizer("gate Hessian is not positive definite".into()))?
            .solve(&grad);
        for j in 0..dim {
            gate[j] += step[j];
        }
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(())
}
