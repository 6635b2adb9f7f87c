//! Mapping variance-explained targets to sensitivity-parameter magnitudes.
//!
//! With `V = Var(m(X))` the variance of the fitted propensity logits and
//! `sigma` the residual sd of the potential outcome, the share of latent
//! treatment-assignment variance explained by the outcome beyond `X` is
//! `sigma^2 gamma^2 / (V + pi^2/3 + sigma^2 gamma^2)`.

mod propensity;
mod report;

pub use propensity::{fit_logistic, fit_propensity, PropensityFit};
pub use report::{calibrate, residual_sd, residual_sd_fn, Benchmark, CalibrationReport, MappingRow};

use crate::error::{Error, Result};
use crate::stats::LOGISTIC_VARIANCE;

/// Bisection stops once the bracket is this tight relative to its end.
const BISECT_REL: f64 = 1e-15;
const BISECT_MAX: usize = 400;
pub const RECURSIVE_RESIDUAL: f64 = 1e-8;

pub fn rho2_x(var_m: f64) -> f64 {
    var_m / (var_m + LOGISTIC_VARIANCE)
}

/// Partial variance explained by the covariates in `full` beyond those in
/// `reduced`. Tiny negative values are rounding and clamp to zero.
pub fn partial_rho2(full: &PropensityFit, reduced: &PropensityFit) -> Result<f64> {
    partial_rho2_of(full.rho2(), reduced.rho2())
}

pub fn partial_rho2_of(rho2_full: f64, rho2_reduced: f64) -> Result<f64> {
    let v = (rho2_full - rho2_reduced) / (1.0 - rho2_reduced);
    if v >= 0.0 {
        Ok(v)
    } else if v >= -1e-10 {
        Ok(0.0)
    } else {
        Err(Error::invalid(format!(
            "reduced propensity model explains more than the full one ({rho2_reduced} > {rho2_full}); covariate sets are not nested"
        )))
    }
}

pub fn partial_r2_of_gamma(gamma: f64, sigma_r: f64, var_m: f64) -> f64 {
    let s = sigma_r * sigma_r * gamma * gamma;
    s / (var_m + LOGISTIC_VARIANCE + s)
}

/// Required `sigma * |gamma|` for a target `rho_star`.
fn scaled_target(rho_star: f64, var_m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho_star) {
        return Err(Error::RhoOutOfRange(rho_star));
    }
    if !(var_m >= 0.0 && var_m.is_finite()) {
        return Err(Error::invalid(format!("Var(m(X)) = {var_m} must be finite and non-negative")));
    }
    Ok((rho_star / (1.0 - rho_star) * (var_m + LOGISTIC_VARIANCE)).sqrt())
}

/// `|gamma|` giving partial variance explained `rho_star`.
pub fn gamma_of_rho2(rho_star: f64, sigma_r: f64, var_m: f64) -> Result<f64> {
    let target = scaled_target(rho_star, var_m)?;
    if !(sigma_r > 0.0 && sigma_r.is_finite()) {
        return Err(Error::invalid(format!("residual sd {sigma_r} must be positive")));
    }
    Ok(target / sigma_r)
}

/// Solves `sigma_r(gamma) * gamma = target` on `[0, gamma_max]` by
/// bisection, for residual sds that move with the tilt.
pub fn gamma_of_rho2_recursive<F>(rho_star: f64, sigma_r_of_gamma: F, var_m: f64, gamma_max: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let target = scaled_target(rho_star, var_m)?;
    if target == 0.0 {
        return Ok(0.0);
    }
    let h = |g: f64| -> Result<f64> {
        let s = sigma_r_of_gamma(g)?;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("residual sd {s} at gamma = {g} is not positive")));
        }
        Ok(s * g - target)
    };
    if !(gamma_max > 0.0 && gamma_max.is_finite()) || h(gamma_max)? < 0.0 {
        return Err(Error::NoBracket { gamma_max });
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    for _ in 0..BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= BISECT_REL * hi {
            break;
        }
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    if h(g)?.abs() > RECURSIVE_RESIDUAL * target.max(1.0) {
        return Err(Error::NoBracket { gamma_max });
    }
    Ok(g)
}

/// `|omega|` for a binary part with class probability `p_class`, using the
/// Bernoulli sufficient-statistic sd `sqrt(p (1 - p))`.
pub fn omega_of_rho2(rho_star: f64, p_class: f64, var_m: f64) -> Result<f64> {
    if !(p_class > 0.0 && p_class < 1.0) {
        return Err(Error::invalid(format!("class probability {p_class} outside (0, 1)")));
    }
    gamma_of_rho2(rho_star, (p_class * (1.0 - p_class)).sqrt(), var_m)
}
