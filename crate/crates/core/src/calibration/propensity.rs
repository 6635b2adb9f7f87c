use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observed::Dataset;
use crate::selection::Arm;
use crate::stats::{expit, mean, pop_variance, softplus};

const RIDGE: f64 = 1e-8;
const MAX_ITER: usize = 100;
const COEF_TOL: f64 = 1e-10;
const PROB_EDGE: f64 = 1e-12;

/// Logistic propensity model on standardized covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityFit {
    pub covariates: Vec<String>,
    /// Intercept first, then one coefficient per standardized covariate.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    #[serde(skip)]
    pub logits: Vec<f64>,
    pub var_m: f64,
    pub deviance: f64,
    pub iterations: usize,
}

impl PropensityFit {
    /// `rho2_x` of this fit.
    pub fn rho2(&self) -> f64 {
        super::rho2_x(self.var_m)
    }
}

/// Fits `logit P(T = 1 | X_S)` for the named covariate subset `S` by IRLS.
/// An empty subset gives the intercept-only model.
pub fn fit_propensity(data: &Dataset, covariates: &[&str]) -> Result<PropensityFit> {
    for arm in Arm::BOTH {
        if data.arm_count(arm) < 2 {
            return Err(Error::EmptyStratum(format!("arm {} has fewer than 2 units", arm.index())));
        }
    }
    let columns =
        covariates.iter().map(|name| Ok(data.column(data.covariate_index(name)?))).collect::<Result<Vec<_>>>()?;
    let t: Vec<bool> = data.t().iter().map(|a| *a == Arm::Treated).collect();
    let mut fit = fit_logistic(&t, &columns)?;
    fit.covariates = covariates.iter().map(|s| s.to_string()).collect();
    Ok(fit)
}

fn standardize(col: &[f64]) -> Vec<f64> {
    let m = mean(col);
    let sd = pop_variance(col).sqrt();
    if sd > 0.0 {
        col.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; col.len()]
    }
}

/// IRLS with a small ridge on the non-intercept coefficients.
pub fn fit_logistic(t: &[bool], columns: &[Vec<f64>]) -> Result<PropensityFit> {
    let n = t.len();
    let p = columns.len() + 1;
    let mut design = DMatrix::from_element(n, p, 1.0);
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(Error::invalid("covariate column length differs from treatment length"));
        }
        for (i, v) in standardize(col).into_iter().enumerate() {
            design[(i, j + 1)] = v;
        }
    }
    let yv = DVector::from_iterator(n, t.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let p1: f64 = yv.mean();
    let mut beta: DVector<f64> = DVector::zeros(p);
    beta[0] = (p1 / (1.0 - p1)).ln();
    let mut iterations = 0;
    let mut info = DMatrix::zeros(p, p);
    for it in 1..=MAX_ITER {
        iterations = it;
        let eta = &design * &beta;
        let mu = eta.map(expit);
        let w = mu.map(|m| m * (1.0 - m));
        let mut xtw = design.transpose();
        for (i, mut col) in xtw.column_iter_mut().enumerate() {
            col *= w[i];
        }
        info = &xtw * &design;
        for j in 1..p {
            info[(j, j)] += RIDGE;
        }
        let mut grad = design.transpose() * (&yv - &mu);
        for j in 1..p {
            grad[j] -= RIDGE * beta[j];
        }
        let chol = info
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Optimizer("propensity information matrix is not positive definite".into()))?;
        let step = chol.solve(&grad);
        beta += &step;
        if step.amax() <= COEF_TOL {
            break;
        }
    }
    let eta = &design * &beta;
    for &e in eta.iter() {
        let pr = expit(e);
        if !(pr > PROB_EDGE && pr < 1.0 - PROB_EDGE) {
            return Err(Error::SeparationDetected(pr.min(1.0 - pr)));
        }
    }
    let cov = info.try_inverse().ok_or_else(|| Error::Optimizer("propensity information matrix is singular".into()))?;
    let deviance = 2.0 * eta.iter().zip(t).map(|(&e, &b)| if b { softplus(-e) } else { softplus(e) }).sum::<f64>();
    let logits: Vec<f64> = eta.iter().copied().collect();
    Ok(PropensityFit {
        covariates: Vec::new(),
        coefficients: beta.iter().copied().collect(),
        std_errors: (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        var_m: pop_variance(&logits),
        logits,
        deviance,
        iterations,
    })
}
