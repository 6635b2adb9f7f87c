use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares regression of `y` on `[1, x]` with the residual variance
/// on `n - p` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub residual_var: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coefficients[0] + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

pub fn fit_linear(ys: &[f64], xs: &[Vec<f64>]) -> Result<LinearFit> {
    let n = ys.len();
    let dim = xs.first().map_or(0, Vec::len) + 1;
    if n <= dim {
        return Err(Error::invalid(format!("{n} units cannot identify {dim} regression coefficients")));
    }
    let design = DMatrix::from_fn(n, dim, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1] });
    let y = DVector::from_column_slice(ys);
    let svd = design.clone().svd(true, true);
    let beta = svd.solve(&y, 1e-12).map_err(|e| Error::Optimizer(e.to_string()))?;
    let resid = y - &design * &beta;
    let residual_var = resid.norm_squared() / (n - dim) as f64;
    if !(residual_var > 0.0) {
        return Err(Error::invalid("regression fits the outcome exactly"));
    }
    Ok(LinearFit { coefficients: beta.iter().copied().collect(), residual_var })
}
