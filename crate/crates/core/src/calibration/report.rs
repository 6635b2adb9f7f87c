use std::fmt::Write as _;

use serde::Serialize;

use super::{fit_propensity, gamma_of_rho2, omega_of_rho2, partial_rho2, rho2_x, PropensityFit};
use crate::ef::{MixtureDist, TiltVector};
use crate::error::{Error, Result};
use crate::observed::{Dataset, ObservedFit};
use crate::selection::{tilt_for_arm, Arm, LogisticSelection};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Benchmark {
    pub covariate: String,
    pub rho2_partial: f64,
    pub implied_gamma: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_omega: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingRow {
    pub rho_star: f64,
    pub gamma: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub covariates: Vec<String>,
    pub var_m: f64,
    pub rho2_x: f64,
    /// Residual sd per arm, on the component scale for log-support fits.
    pub sigma_r: [f64; 2],
    /// Employment probability per arm, when the fit has a zero atom.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_class: Option<[f64; 2]>,
    pub benchmarks: Vec<Benchmark>,
    pub mapping: Vec<MappingRow>,
    pub propensity: PropensityFit,
    pub notes: Vec<String>,
}

fn average(units: &[MixtureDist], f: impl Fn(&MixtureDist) -> f64) -> f64 {
    units.iter().map(f).sum::<f64>() / units.len() as f64
}

/// `sqrt(E[Var(Y(arm) | X)])` over observed units at zero tilt.
pub fn residual_sd(fit: &ObservedFit, arm: Arm) -> f64 {
    average(&fit.arm(arm).observed, MixtureDist::component_scale_variance).sqrt()
}

/// Residual sd of the complete arm distribution as a function of the tilt
/// magnitude; `sign` fixes the direction of `gamma`.
pub fn residual_sd_fn(fit: &ObservedFit, arm: Arm, sign: f64) -> impl Fn(f64) -> Result<f64> + '_ {
    move |g: f64| {
        let a = fit.arm(arm);
        let p_own = fit.prevalence.p(arm);
        let mut gamma = [TiltVector::ZERO; 2];
        gamma[arm.index()] = TiltVector::linear(sign * g);
        let tv = tilt_for_arm(&LogisticSelection::new(gamma[0], gamma[1]), arm);
        let observed = average(&a.observed, MixtureDist::component_scale_variance);
        let mut missing = 0.0;
        for m in a.other_units() {
            missing += m.tilt(&tv)?.component_scale_variance();
        }
        missing /= a.other_units().len() as f64;
        Ok((p_own * observed + (1.0 - p_own) * missing).sqrt())
    }
}

fn employment_probability(fit: &ObservedFit) -> Option<[f64; 2]> {
    let has_atom = Arm::BOTH.iter().any(|&a| fit.arm(a).observed.iter().any(|m| m.zero_atom() > 0.0));
    has_atom.then(|| Arm::BOTH.map(|a| 1.0 - average(&fit.arm(a).observed, MixtureDist::zero_atom)))
}

/// Propensity fit on `covariates`, leave-one-out benchmarks and the
/// `rho_star -> |gamma|` mapping for each requested target.
pub fn calibrate(
    data: &Dataset,
    fit: &ObservedFit,
    covariates: &[&str],
    rho_stars: &[f64],
) -> Result<CalibrationReport> {
    let full = fit_propensity(data, covariates)?;
    let var_m = full.var_m;
    let sigma_r = Arm::BOTH.map(|a| residual_sd(fit, a));
    if sigma_r.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("observed fit has zero residual spread"));
    }
    let p_class = employment_probability(fit);
    let gammas = |rho: f64| -> Result<[f64; 2]> {
        Ok([gamma_of_rho2(rho, sigma_r[0], var_m)?, gamma_of_rho2(rho, sigma_r[1], var_m)?])
    };
    let omegas = |rho: f64| -> Result<Option<[f64; 2]>> {
        p_class.map(|p| Ok([omega_of_rho2(rho, p[0], var_m)?, omega_of_rho2(rho, p[1], var_m)?])).transpose()
    };
    let mut benchmarks = Vec::with_capacity(covariates.len());
    for (j, name) in covariates.iter().enumerate() {
        let rest: Vec<&str> = covariates.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, c)| *c).collect();
        let reduced = fit_propensity(data, &rest)?;
        let rho = partial_rho2(&full, &reduced)?;
        benchmarks.push(Benchmark {
            covariate: name.to_string(),
            rho2_partial: rho,
            implied_gamma: gammas(rho)?,
            implied_omega: omegas(rho)?,
        });
    }
    let mapping = rho_stars
        .iter()
        .map(|&rho| Ok(MappingRow { rho_star: rho, gamma: gammas(rho)?, omega: omegas(rho)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    if p_class.is_some() {
        notes.push("omega uses the Bernoulli sd sqrt(p(1-p)) of the employment indicator as its residual sd".into());
    }
    if Arm::BOTH.iter().any(|&a| fit.arm(a).observed.iter().any(|m| m.len() > 1)) {
        notes.push(
            "mixture arms: residual sd changes with the tilt; see the recursive solver for exact magnitudes".into(),
        );
    }
    Ok(CalibrationReport {
        covariates: covariates.iter().map(|s| s.to_string()).collect(),
        var_m,
        rho2_x: rho2_x(var_m),
        sigma_r,
        p_class,
        benchmarks,
        mapping,
        propensity: full,
        notes,
    })
}

impl CalibrationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text benchmark table.
    pub fn table(&self) -> String {
        let omega = self.p_class.is_some();
        let mut s = String::new();
        let _ =
            write!(s, "{:<20} {:>12} {:>14} {:>14}", "covariate", "rho2_partial", "implied_gamma0", "implied_gamma1");
        if omega {
            let _ = write!(s, " {:>14} {:>14}", "implied_omega0", "implied_omega1");
        }
        s.push('\n');
        for b in &self.benchmarks {
            let _ = write!(
                s,
                "{:<20} {:>12.6} {:>14.6} {:>14.6}",
                b.covariate, b.rho2_partial, b.implied_gamma[0], b.implied_gamma[1]
            );
            if let Some(w) = b.implied_omega {
                let _ = write!(s, " {:>14.6} {:>14.6}", w[0], w[1]);
            }
            s.push('\n');
        }
        s
    }
}
