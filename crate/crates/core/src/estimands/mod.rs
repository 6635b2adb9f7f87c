//! Complete-data marginals and marginal-contrast estimands.
//!
//! For arm `t` the complete marginal is `p_t` times the average observed
//! conditional over units with `T = t`, plus `p_{1-t}` times the average
//! missing conditional over units with `T = 1 - t`. Missing conditionals
//! come from [`SelectionSpec::missing`] and never touch the data.

mod sweep;

pub use sweep::{parse_point, sweep, Axis, Grid, GridAxis, IgnoranceTable, SelectionFamily, TableRow};

use std::fmt;
use std::str::FromStr;

use crate::ef::MixtureDist;
use crate::error::{Error, Result};
use crate::observed::ObservedFit;
use crate::selection::{Arm, LatentClassSelection, Omega, SelectionSpec};
use crate::stats::{sort_floats, sorted_quantile};

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimand {
    Ate,
    Att,
    Atc,
    Qte(f64),
}

impl Estimand {
    pub fn name(&self) -> &'static str {
        match self {
            Estimand::Ate => "ate",
            Estimand::Att => "att",
            Estimand::Atc => "atc",
            Estimand::Qte(_) => "qte",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self {
            Estimand::Qte(q) => Some(*q),
            _ => None,
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimand::Qte(q) => write!(f, "qte({q})"),
            e => f.write_str(e.name()),
        }
    }
}

/// Which estimand family to compute; QTE needs its levels separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimandKind {
    Ate,
    Att,
    Atc,
    Qte,
}

impl FromStr for EstimandKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ate" => Ok(EstimandKind::Ate),
            "att" => Ok(EstimandKind::Att),
            "atc" => Ok(EstimandKind::Atc),
            "qte" => Ok(EstimandKind::Qte),
            _ => Err(Error::invalid(format!("unknown estimand '{s}' (expected ate, att, atc or qte)"))),
        }
    }
}

impl EstimandKind {
    /// Concrete estimands; QTE expands over `qs`.
    pub fn expand(self, qs: &[f64]) -> Result<Vec<Estimand>> {
        Ok(match self {
            EstimandKind::Ate => vec![Estimand::Ate],
            EstimandKind::Att => vec![Estimand::Att],
            EstimandKind::Atc => vec![Estimand::Atc],
            EstimandKind::Qte => {
                if qs.is_empty() {
                    return Err(Error::invalid("qte needs at least one quantile level"));
                }
                for &q in qs {
                    if !(q > 0.0 && q < 1.0) {
                        return Err(Error::QuantileOutOfRange(q));
                    }
                }
                qs.iter().map(|&q| Estimand::Qte(q)).collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimandResult {
    pub estimand: Estimand,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_draws: usize,
}

impl EstimandResult {
    /// Interval excludes zero.
    pub fn significant(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

/// Observed fit plus a sensitivity point.
#[derive(Debug, Clone, Copy)]
pub struct CompleteDataModel<'a> {
    pub fit: &'a ObservedFit,
    pub selection: SelectionSpec,
}

impl<'a> CompleteDataModel<'a> {
    pub fn new(fit: &'a ObservedFit, selection: SelectionSpec) -> Self {
        Self { fit, selection }
    }

    fn on(&self, fit: &'a ObservedFit) -> Self {
        Self { fit, selection: self.selection }
    }

    /// Missing arm-`arm` conditionals at the other arm's units.
    pub fn missing_units(&self, arm: Arm) -> Result<Vec<MixtureDist>> {
        self.fit.arm(arm).other_units().iter().map(|m| self.selection.missing(m, arm)).collect()
    }

    /// Average observed and average missing arm means.
    fn arm_means(&self, arm: Arm) -> Result<(f64, f64)> {
        let a = self.fit.arm(arm);
        let observed = average(a.observed.iter().map(|m| Ok(m.mean())))?;
        let missing = average(a.other_units().iter().map(|m| Ok(self.selection.missing(m, arm)?.mean())))?;
        Ok((observed, missing))
    }

    /// `E[Y(arm)]` over the whole population.
    pub fn arm_mean(&self, arm: Arm) -> Result<f64> {
        let (observed, missing) = self.arm_means(arm)?;
        Ok(observed + self.fit.prevalence.p(arm.other()) * (missing - observed))
    }

    /// Point value on this fit alone (no replication).
    pub fn point(&self, estimand: Estimand) -> Result<f64> {
        match estimand {
            Estimand::Ate => Ok(self.arm_mean(Arm::Treated)? - self.arm_mean(Arm::Control)?),
            Estimand::Att => Ok(self.arm_means(Arm::Treated)?.0 - self.arm_means(Arm::Control)?.1),
            Estimand::Atc => Ok(self.arm_means(Arm::Treated)?.1 - self.arm_means(Arm::Control)?.0),
            Estimand::Qte(q) => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::QuantileOutOfRange(q));
                }
                let q1 = complete_marginal(self, Arm::Treated)?.quantile(q)?;
                let q0 = complete_marginal(self, Arm::Control)?.quantile(q)?;
                Ok(q1 - q0)
            }
        }
    }

    /// Point value with a percentile interval over the fit's replicate
    /// draws. Without draws the interval collapses to the estimate.
    pub fn evaluate(&self, estimand: Estimand, level: f64) -> Result<EstimandResult> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!("interval level {level} outside (0, 1)")));
        }
        let estimate = self.point(estimand)?;
        let mut reps = self.fit.draws.iter().map(|d| self.on(d).point(estimand)).collect::<Result<Vec<f64>>>()?;
        let (lo, hi) = if reps.is_empty() {
            (estimate, estimate)
        } else {
            sort_floats(&mut reps);
            let tail = 0.5 * (1.0 - level);
            (sorted_quantile(&reps, tail).min(estimate), sorted_quantile(&reps, 1.0 - tail).max(estimate))
        };
        Ok(EstimandResult { estimand, estimate, lo, hi, n_draws: reps.len() })
    }
}

fn average(values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("no units to average"));
    }
    Ok(sum / n as f64)
}

/// Complete-data marginal of `Y(arm)` as one mixture.
pub fn complete_marginal(model: &CompleteDataModel<'_>, arm: Arm) -> Result<MixtureDist> {
    let a = model.fit.arm(arm);
    let missing = model.missing_units(arm)?;
    let p_own = model.fit.prevalence.p(arm);
    let p_other = 1.0 - p_own;
    let own_w = p_own / a.observed.len() as f64;
    let other_w = p_other / missing.len() as f64;
    let parts: Vec<(f64, &MixtureDist)> =
        a.observed.iter().map(|m| (own_w, m)).chain(missing.iter().map(|m| (other_w, m))).collect();
    MixtureDist::blend(&parts)
}

pub fn ate(model: &CompleteDataModel<'_>, level: f64) -> Result<EstimandResult> {
    model.evaluate(Estimand::Ate, level)
}

pub fn att(model: &CompleteDataModel<'_>, level: f64) -> Result<EstimandResult> {
    model.evaluate(Estimand::Att, level)
}

pub fn atc(model: &CompleteDataModel<'_>, level: f64) -> Result<EstimandResult> {
    model.evaluate(Estimand::Atc, level)
}

pub fn qte(model: &CompleteDataModel<'_>, q: f64, level: f64) -> Result<EstimandResult> {
    model.evaluate(Estimand::Qte(q), level)
}

/// Estimand at the two extreme latent-class corners, ordered so that
/// `lower.estimate <= upper.estimate`.
pub fn latent_class_bounds(
    fit: &ObservedFit,
    estimand: Estimand,
    level: f64,
) -> Result<(EstimandResult, EstimandResult)> {
    let corner = |w0: Omega, w1: Omega| {
        CompleteDataModel::new(fit, SelectionSpec::LatentClass(LatentClassSelection::new(w0, w1)))
            .evaluate(estimand, level)
    };
    let a = corner(Omega::PosInf, Omega::NegInf)?;
    let b = corner(Omega::NegInf, Omega::PosInf)?;
    Ok(if a.estimate <= b.estimate { (a, b) } else { (b, a) })
}
