use std::fmt;
use std::str::FromStr;

use super::dataset::Dataset;
use super::em::{em_fit, em_refit};
use super::fit::{ArmFit, ObservedFit};
use super::gated::{fit_gated, refit_gated, GatedFit};
use super::large_k::fit_large_k;
use super::linear::fit_linear;
use super::two_part::{fit_two_part, TwoPartConfig};
use crate::ef::{MixtureDist, UnivariateEF};
use crate::error::{Error, Result};
use crate::selection::Arm;

pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_CONCENTRATION: f64 = 1.0;

/// Built-in observed-outcome model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Pooled `k`-component Gaussian mixture per arm.
    Em { k: usize, restarts: usize },
    /// Pooled truncated stick-breaking mixture per arm.
    LargeK { k_max: usize, concentration: f64 },
    /// Zero atom plus log-scale mixture per arm.
    TwoPart { k_max: usize, concentration: f64 },
    /// Two Normal classes with covariate-dependent class weights per arm.
    LatentClass { restarts: usize },
    /// Per-unit Normal with a linear mean in the covariates and one residual
    /// variance per arm.
    Linear,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let count = |default: Option<usize>| -> Result<usize> {
            match (arg, default) {
                (Some(a), _) => a
                    .parse::<usize>()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::invalid(format!("model '{s}': '{a}' is not a positive integer"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::invalid(format!("model '{s}' needs a component count, e.g. {name}:2"))),
            }
        };
        match name {
            "em" => Ok(Model::Em { k: count(None)?, restarts: DEFAULT_RESTARTS }),
            "largek" => Ok(Model::LargeK { k_max: count(None)?, concentration: DEFAULT_CONCENTRATION }),
            "two-part" => Ok(Model::TwoPart { k_max: count(Some(10))?, concentration: DEFAULT_CONCENTRATION }),
            "latent-class" if arg.is_none() => Ok(Model::LatentClass { restarts: DEFAULT_RESTARTS }),
            "linear" if arg.is_none() => Ok(Model::Linear),
            _ => Err(Error::invalid(format!(
                "unknown model '{s}' (expected em:K, largek:K, two-part, latent-class or linear)"
            ))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Em { k, .. } => write!(f, "em:{k}"),
            Model::LargeK { k_max, .. } => write!(f, "largek:{k_max}"),
            Model::TwoPart { k_max, .. } => write!(f, "two-part:{k_max}"),
            Model::LatentClass { .. } => write!(f, "latent-class"),
            Model::Linear => write!(f, "linear"),
        }
    }
}

/// Parameters a refit can start from.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStart {
    None,
    Pooled([MixtureDist; 2]),
    Gated([GatedFit; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub fit: ObservedFit,
    pub warm: WarmStart,
}

impl Model {
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<Fitted> {
        self.fit_inner(data, seed, &WarmStart::None)
    }

    /// Refit on new data, starting from `warm` where the model supports it.
    pub fn refit(&self, data: &Dataset, seed: u64, warm: &WarmStart) -> Result<Fitted> {
        self.fit_inner(data, seed, warm)
    }

    fn fit_inner(&self, data: &Dataset, seed: u64, warm: &WarmStart) -> Result<Fitted> {
        let prevalence = data.prevalence()?;
        let arm_seed = |arm: Arm| seed.wrapping_mul(2).wrapping_add(arm.index() as u64);
        match self {
            Model::Em { k, restarts } => {
                let fit_arm = |arm: Arm| -> Result<MixtureDist> {
                    let ys = data.arm_outcomes(arm);
                    if let WarmStart::Pooled(init) = warm {
                        if let Ok(m) = em_refit(&ys, &init[arm.index()]) {
                            return Ok(m);
                        }
                    }
                    em_fit(&ys, *k, *restarts, arm_seed(arm))
                };
                pooled(prevalence, fit_arm(Arm::Control)?, fit_arm(Arm::Treated)?)
            }
            Model::LargeK { k_max, concentration } => {
                let fit_arm = |arm: Arm| fit_large_k(&data.arm_outcomes(arm), *k_max, *concentration, arm_seed(arm));
                pooled(prevalence, fit_arm(Arm::Control)?, fit_arm(Arm::Treated)?)
            }
            Model::TwoPart { k_max, concentration } => {
                let cfg = TwoPartConfig { k_max: *k_max, concentration: *concentration, seed };
                let [c, t] = fit_two_part(data, &cfg)?.arms;
                pooled(prevalence, c, t)
            }
            Model::LatentClass { restarts } => {
                let mut fits = Vec::with_capacity(2);
                for arm in Arm::BOTH {
                    let idx = data.arm_indices(arm);
                    let ys: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
                    let xs: Vec<Vec<f64>> = idx.iter().map(|&i| data.x()[i].clone()).collect();
                    let fitted = match warm {
                        WarmStart::Gated(init) => refit_gated(&ys, &xs, &init[arm.index()])
                            .or_else(|_| fit_gated(&ys, &xs, *restarts, arm_seed(arm)))?,
                        _ => fit_gated(&ys, &xs, *restarts, arm_seed(arm))?,
                    };
                    fits.push(fitted);
                }
                let arms = [
                    arm_from(data, Arm::Control, |x| fits[0].unit_mixture(x))?,
                    arm_from(data, Arm::Treated, |x| fits[1].unit_mixture(x))?,
                ];
                let [a0, a1] = arms;
                let fit = ObservedFit::new(prevalence, a0, a1)?;
                let treated = fits.pop().expect("two arms");
                let control = fits.pop().expect("two arms");
                Ok(Fitted { fit, warm: WarmStart::Gated([control, treated]) })
            }
            Model::Linear => {
                let mut arms = Vec::with_capacity(2);
                for arm in Arm::BOTH {
                    let idx = data.arm_indices(arm);
                    let ys: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
                    let xs: Vec<Vec<f64>> = idx.iter().map(|&i| data.x()[i].clone()).collect();
                    let lf = fit_linear(&ys, &xs)?;
                    arms.push(arm_from(data, arm, |x| {
                        Ok(MixtureDist::single(UnivariateEF::normal(lf.predict(x), lf.residual_var)?))
                    })?);
                }
                let a1 = arms.pop().expect("two arms");
                let a0 = arms.pop().expect("two arms");
                Ok(Fitted { fit: ObservedFit::new(prevalence, a0, a1)?, warm: WarmStart::None })
            }
        }
    }
}

fn pooled(prevalence: crate::selection::TreatmentPrevalence, c: MixtureDist, t: MixtureDist) -> Result<Fitted> {
    let fit = ObservedFit::pooled(prevalence, c.clone(), t.clone());
    Ok(Fitted { fit, warm: WarmStart::Pooled([c, t]) })
}

/// Per-unit arm model: `model(x)` at the arm's own units and at the other
/// arm's units.
fn arm_from<F: Fn(&[f64]) -> Result<MixtureDist>>(data: &Dataset, arm: Arm, model: F) -> Result<ArmFit> {
    let at =
        |a: Arm| -> Result<Vec<MixtureDist>> { data.arm_indices(a).into_iter().map(|i| model(&data.x()[i])).collect() };
    Ok(ArmFit::per_unit(at(arm)?, at(arm.other())?))
}
