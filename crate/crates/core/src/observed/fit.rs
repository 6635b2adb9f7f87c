use crate::ef::MixtureDist;
use crate::error::{Error, Result};
use crate::selection::{Arm, TreatmentPrevalence};

/// Outcome model for one arm `t`.
///
/// `observed` holds `f(Y(t) | T = t, X_i)` for the units with `T = t` in
/// dataset order, or a single pooled mixture. `counterfactual`, when
/// present, holds the same arm-`t` model evaluated at the covariates of the
/// units with `T = 1 - t`; these are the distributions that get tilted.
/// Without it the observed list stands in for both populations.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmFit {
    pub observed: Vec<MixtureDist>,
    pub counterfactual: Option<Vec<MixtureDist>>,
}

impl ArmFit {
    pub fn pooled(mix: MixtureDist) -> Self {
        Self { observed: vec![mix], counterfactual: None }
    }

    pub fn per_unit(observed: Vec<MixtureDist>, counterfactual: Vec<MixtureDist>) -> Self {
        Self { observed, counterfactual: Some(counterfactual) }
    }

    pub fn is_pooled(&self) -> bool {
        self.observed.len() == 1 && self.counterfactual.is_none()
    }

    /// Distributions to tilt for the missing arm.
    pub fn other_units(&self) -> &[MixtureDist] {
        self.counterfactual.as_deref().unwrap_or(&self.observed)
    }

    /// Observed-arm conditional of the `k`-th unit with `T = t`.
    pub fn unit(&self, k: usize) -> &MixtureDist {
        if self.observed.len() == 1 {
            &self.observed[0]
        } else {
            &self.observed[k]
        }
    }
}

/// Observed-data outcome model for both arms, with optional replicate fits
/// (posterior draws or bootstrap refits) used for intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedFit {
    pub prevalence: TreatmentPrevalence,
    pub arms: [ArmFit; 2],
    pub draws: Vec<ObservedFit>,
}

impl ObservedFit {
    pub fn new(prevalence: TreatmentPrevalence, control: ArmFit, treated: ArmFit) -> Result<Self> {
        let fit = Self { prevalence, arms: [control, treated], draws: Vec::new() };
        fit.validate()?;
        Ok(fit)
    }

    pub fn pooled(prevalence: TreatmentPrevalence, control: MixtureDist, treated: MixtureDist) -> Self {
        Self { prevalence, arms: [ArmFit::pooled(control), ArmFit::pooled(treated)], draws: Vec::new() }
    }

    pub fn arm(&self, arm: Arm) -> &ArmFit {
        &self.arms[arm.index()]
    }

    pub fn with_draws(mut self, draws: Vec<ObservedFit>) -> Self {
        self.draws = draws;
        self
    }

    /// Per-unit lists must match the arm counts when those are known.
    pub fn validate(&self) -> Result<()> {
        let [n0, n1] = self.prevalence.counts();
        let known = n0 > 0 && n1 > 0;
        for arm in Arm::BOTH {
            let a = self.arm(arm);
            if a.observed.is_empty() {
                return Err(Error::invalid(format!("arm {} has no outcome model", arm.index())));
            }
            if !known {
                continue;
            }
            let (own, other) = (self.prevalence.count(arm), self.prevalence.count(arm.other()));
            if a.observed.len() != 1 && a.observed.len() != own {
                return Err(Error::invalid(format!(
                    "arm {} lists {} unit models for {own} units",
                    arm.index(),
                    a.observed.len()
                )));
            }
            if let Some(cf) = &a.counterfactual {
                if cf.len() != other {
                    return Err(Error::invalid(format!(
                        "arm {} lists {} counterfactual models for {other} units",
                        arm.index(),
                        cf.len()
                    )));
                }
            }
        }
        Ok(())
    }
}
