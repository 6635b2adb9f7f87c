//! Selection functions `f(T = 1 | Y(t))` and their translation into tilts.
//!
//! Sign convention: the user-facing sensitivity parameters enter the
//! treatment log-odds as `alpha_t + gamma_t . s(Y(t))` in both arms. The
//! missing arm-`t` outcome is the observed one reweighted by
//! `f(T = 1 - t | y) / f(T = t | y)`, so arm 0 is tilted by `+gamma_0` and
//! arm 1 by `-gamma_1`. With this orientation `gamma_0 > 0` means the
//! observed controls average lower than the missing controls, and
//! `gamma_1 > 0` means the observed treated average higher than the missing
//! treated.

use serde::{Deserialize, Serialize};

use crate::ef::oracle::{trapezoid, GridSpec};
use crate::ef::{Family, MixtureDist, Support, TiltVector};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stats::{expit, log_sum_exp, logit};

/// ESS ratio below which overlap is flagged.
pub const OVERLAP_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    Control,
    Treated,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Treated];

    pub fn index(self) -> usize {
        match self {
            Arm::Control => 0,
            Arm::Treated => 1,
        }
    }

    pub fn from_index(t: usize) -> Result<Self> {
        match t {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Treated),
            _ => Err(Error::invalid(format!("treatment indicator {t} is not 0 or 1"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Arm::Control => Arm::Treated,
            Arm::Treated => Arm::Control,
        }
    }
}

/// Marginal treatment probability `p1 = f(T = 1)` with the arm counts it
/// came from (zero when supplied directly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreatmentPrevalence {
    p1: f64,
    counts: [usize; 2],
}

impl TreatmentPrevalence {
    pub fn new(p1: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::invalid(format!("treatment prevalence {p1} must lie in (0, 1)")));
        }
        Ok(Self { p1, counts: [0, 0] })
    }

    pub fn from_counts(n0: usize, n1: usize) -> Result<Self> {
        if n0 == 0 || n1 == 0 {
            return Err(Error::EmptyStratum(format!("arm counts n0 = {n0}, n1 = {n1}")));
        }
        Ok(Self { p1: n1 as f64 / (n0 + n1) as f64, counts: [n0, n1] })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    /// `f(T = arm)`.
    pub fn p(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Control => 1.0 - self.p1,
            Arm::Treated => self.p1,
        }
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.counts[arm.index()]
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }
}

/// Logistic selection in each arm: treatment log-odds
/// `alpha_t + gamma_t . s(Y(t))` for the continuous outcome and, for
/// two-part outcomes, a separate log-odds shift `zero_shift_t` for units at
/// the zero atom.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogisticSelection {
    pub gamma: [TiltVector; 2],
    pub zero_shift: [f64; 2],
    pub alpha: [Option<f64>; 2],
}

impl LogisticSelection {
    pub fn new(gamma0: TiltVector, gamma1: TiltVector) -> Self {
        Self { gamma: [gamma0, gamma1], ..Default::default() }
    }

    pub fn linear(gamma0: f64, gamma1: f64) -> Self {
        Self::new(TiltVector::linear(gamma0), TiltVector::linear(gamma1))
    }

    pub fn with_zero_shift(mut self, omega0: f64, omega1: f64) -> Self {
        self.zero_shift = [omega0, omega1];
        self
    }

    pub fn is_null(&self) -> bool {
        self.gamma.iter().all(TiltVector::is_zero) && self.zero_shift.iter().all(|w| *w == 0.0)
    }

    /// Solves both intercepts against the given observed arm models.
    pub fn with_alphas(mut self, obs: [&MixtureDist; 2], prevalence: &TreatmentPrevalence) -> Result<Self> {
        for arm in Arm::BOTH {
            self.alpha[arm.index()] = Some(solve_alpha(obs[arm.index()], &self.gamma[arm.index()], prevalence, arm)?);
        }
        Ok(self)
    }
}

/// Oriented tilt applied to the observed arm-`arm` outcome model to obtain
/// the missing one.
pub fn tilt_for_arm(sel: &LogisticSelection, arm: Arm) -> TiltVector {
    orient(sel.gamma[arm.index()], arm)
}

/// Oriented log-odds shift of the zero atom for the missing arm.
pub fn zero_shift_for_arm(sel: &LogisticSelection, arm: Arm) -> f64 {
    match arm {
        Arm::Control => sel.zero_shift[0],
        Arm::Treated => -sel.zero_shift[1],
    }
}

fn orient(gamma: TiltVector, arm: Arm) -> TiltVector {
    match arm {
        Arm::Control => gamma,
        Arm::Treated => -gamma,
    }
}

/// `f(T = 1 | Y(arm) = y)` under logistic selection. `m_x` is the logit
/// propensity at the unit's covariates; pass `logit(p1)` for the pooled
/// intercept.
pub fn selection_prob(
    sel: &LogisticSelection,
    arm: Arm,
    y: f64,
    m_x: f64,
    prevalence: &TreatmentPrevalence,
) -> Result<f64> {
    let t = arm.index();
    let alpha = sel.alpha[t].ok_or(Error::AlphaUnsolved(t as u8))?;
    let offset = alpha - logit(prevalence.p1()) + m_x;
    Ok(expit(offset + sel.gamma[t].dot_stat(y)))
}

/// `ln E_obs[exp(tv . s(Y))]`, the zero atom contributing `s = 0`.
pub fn log_mgf(obs: &MixtureDist, tv: &TiltVector) -> Result<f64> {
    obs.check_tilt(tv)?;
    let mut terms = Vec::with_capacity(obs.len() + 1);
    for (c, w) in obs.components().iter().zip(obs.weights()) {
        if *w > 0.0 {
            terms.push(w.ln() + c.log_tilt_normalizer(tv)?);
        }
    }
    if obs.zero_atom() > 0.0 {
        terms.push(obs.zero_atom().ln());
    }
    Ok(log_sum_exp(&terms))
}

/// The intercept satisfying the integral constraint
/// `E_obs[f(T = 1 - t | Y) / f(T = t | Y)] = f(T = 1 - t) / f(T = t)`.
pub fn solve_alpha(obs: &MixtureDist, gamma: &TiltVector, prevalence: &TreatmentPrevalence, arm: Arm) -> Result<f64> {
    let lm = log_mgf(obs, &orient(*gamma, arm))?;
    let lp = logit(prevalence.p1());
    Ok(match arm {
        Arm::Control => lp - lm,
        Arm::Treated => lp + lm,
    })
}

/// Same root found by bisection on the quadrature residual; a reference for
/// [`solve_alpha`].
pub fn solve_alpha_bisection(
    obs: &MixtureDist,
    gamma: &TiltVector,
    prevalence: &TreatmentPrevalence,
    arm: Arm,
) -> Result<f64> {
    let residual = |a: f64| -> Result<f64> {
        let mut sel = LogisticSelection::default();
        sel.gamma[arm.index()] = *gamma;
        sel.alpha[arm.index()] = Some(a);
        signed_constraint_residual(obs, &sel, prevalence, arm)
    };
    let centre = logit(prevalence.p1());
    let (mut lo, mut hi) = (centre - 1.0, centre + 1.0);
    // residual is increasing in alpha for arm 0 and decreasing for arm 1
    let dir = if arm == Arm::Control { 1.0 } else { -1.0 };
    let mut width = 1.0;
    while dir * residual(lo)? > 0.0 {
        width *= 2.0;
        lo -= width;
    }
    width = 1.0;
    while dir * residual(hi)? < 0.0 {
        width *= 2.0;
        hi += width;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?;
        if r.abs() <= 1e-10 {
            return Ok(mid);
        }
        if dir * r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn signed_constraint_residual(
    obs: &MixtureDist,
    sel: &LogisticSelection,
    prevalence: &TreatmentPrevalence,
    arm: Arm,
) -> Result<f64> {
    let t = arm.index();
    let alpha = sel.alpha[t].ok_or(Error::AlphaUnsolved(t as u8))?;
    let gamma = sel.gamma[t];
    // log odds of T = 1 - t versus T = t, as a function of the statistic
    let log_odds = |y: f64| match arm {
        Arm::Control => alpha + gamma.dot_stat(y),
        Arm::Treated => -(alpha + gamma.dot_stat(y)),
    };
    let lhs = match obs.family() {
        Family::Bernoulli => {
            let p = obs.mean();
            (1.0 - p) * log_odds(0.0).exp() + p * log_odds(1.0).exp()
        }
        Family::Normal => {
            let scale_view = if obs.support() == Support::Log { component_scale_view(obs)? } else { obs.clone() };
            let grid = GridSpec::covering(&scale_view, &orient(gamma, arm))?;
            let values: Vec<f64> = grid.points().iter().map(|&y| scale_view.density(y) * log_odds(y).exp()).collect();
            let cont = trapezoid(&values, grid.step());
            cont + obs.zero_atom() * log_odds(0.0).exp()
        }
    };
    let rhs = prevalence.p(arm.other()) / prevalence.p(arm);
    Ok(lhs - rhs)
}

fn component_scale_view(obs: &MixtureDist) -> Result<MixtureDist> {
    MixtureDist::with_zero_atom(obs.components().to_vec(), obs.continuous_weights(), obs.zero_atom(), Support::Identity)
}

/// `|LHS - RHS|` of the integral constraint, by quadrature.
pub fn verify_integral_constraint(
    obs: &MixtureDist,
    sel: &LogisticSelection,
    prevalence: &TreatmentPrevalence,
    arm: Arm,
) -> Result<f64> {
    Ok(signed_constraint_residual(obs, sel, prevalence, arm)?.abs())
}

/// Log odds ratio of class-0 membership between observed and missing
/// populations. Infinite values are exact bound sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Omega {
    pub const ZERO: Omega = Omega::Finite(0.0);

    pub fn from_f64(w: f64) -> Result<Self> {
        if w == f64::INFINITY {
            Ok(Omega::PosInf)
        } else if w == f64::NEG_INFINITY {
            Ok(Omega::NegInf)
        } else if w.is_finite() {
            Ok(Omega::Finite(w))
        } else {
            Err(Error::invalid("omega must not be NaN"))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Omega::Finite(w) => w,
            Omega::PosInf => f64::INFINITY,
            Omega::NegInf => f64::NEG_INFINITY,
        }
    }
}

impl std::fmt::Display for Omega {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Omega::Finite(w) => write!(f, "{w}"),
            Omega::PosInf => write!(f, "inf"),
            Omega::NegInf => write!(f, "-inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentClassSelection {
    pub omega: [Omega; 2],
}

impl LatentClassSelection {
    pub fn new(omega0: Omega, omega1: Omega) -> Self {
        Self { omega: [omega0, omega1] }
    }

    pub fn finite(omega0: f64, omega1: f64) -> Self {
        Self::new(Omega::Finite(omega0), Omega::Finite(omega1))
    }
}

/// `logit(pi_mis) = logit(pi_obs) - omega` for the class-0 weight.
pub fn latent_class_missing_weight(pi_obs: f64, omega: Omega) -> f64 {
    match omega {
        Omega::Finite(w) => {
            if w == 0.0 {
                pi_obs
            } else {
                expit(logit(pi_obs) - w)
            }
        }
        Omega::PosInf => 0.0,
        Omega::NegInf => 1.0,
    }
}

/// Class-0 weights `(pi^0, pi^1)` of the arm-`arm` outcome in the control
/// and treated populations.
fn class_weights_by_population(obs: &MixtureDist, omega: Omega, arm: Arm) -> Result<(f64, f64)> {
    if obs.len() != 2 {
        return Err(Error::invalid(format!(
            "latent-class selection needs a two-component arm model, got {}",
            obs.len()
        )));
    }
    let pi_obs = obs.continuous_weights()[0];
    if !(pi_obs > 0.0 && pi_obs < 1.0) {
        return Err(Error::invalid(format!("observed class weight {pi_obs} outside (0, 1)")));
    }
    let pi_mis = latent_class_missing_weight(pi_obs, omega);
    Ok(match arm {
        Arm::Control => (pi_obs, pi_mis),
        Arm::Treated => (pi_mis, pi_obs),
    })
}

/// `f(T = 1 | Y(arm) = y)` implied by the two-class model, evaluated in
/// log space so that far tails stay finite.
pub fn latent_class_selection_prob(
    obs: &MixtureDist,
    omega: Omega,
    prevalence: &TreatmentPrevalence,
    arm: Arm,
    y: f64,
) -> Result<f64> {
    let (pi0, pi1) = class_weights_by_population(obs, omega, arm)?;
    let lf0 = obs.components()[0].log_density(y);
    let lf1 = obs.components()[1].log_density(y);
    let mix = |pi: f64| log_sum_exp(&[pi.ln() + lf0, (1.0 - pi).ln() + lf1]);
    let treated = prevalence.p1().ln() + mix(pi1);
    let control = (1.0 - prevalence.p1()).ln() + mix(pi0);
    Ok(expit(treated - control))
}

/// Limits of [`latent_class_selection_prob`] as `y -> -inf` and `y -> +inf`.
pub fn latent_class_asymptotes(
    obs: &MixtureDist,
    omega: Omega,
    prevalence: &TreatmentPrevalence,
    arm: Arm,
) -> Result<(f64, f64)> {
    let (pi0, pi1) = class_weights_by_population(obs, omega, arm)?;
    let p1 = prevalence.p1();
    let lower = p1 * pi1 / (p1 * pi1 + (1.0 - p1) * pi0);
    let upper = p1 * (1.0 - pi1) / (p1 * (1.0 - pi1) + (1.0 - p1) * (1.0 - pi0));
    Ok((lower, upper))
}

/// Treatment odds at `y -> +inf` divided by those at `y -> -inf`:
/// `(1 - pi^1) pi^0 / ((1 - pi^0) pi^1)`.
pub fn latent_class_tail_odds_ratio(pi0: f64, pi1: f64) -> f64 {
    (1.0 - pi1) * pi0 / ((1.0 - pi0) * pi1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapReport {
    pub ess_ratio: f64,
    pub warn: bool,
}

/// Importance-sampling effective sample size of the tilt weights under the
/// observed model, divided by the number of draws.
pub fn overlap_diagnostic(obs: &MixtureDist, tv: &TiltVector, n_draws: usize, seed: u64) -> Result<OverlapReport> {
    obs.check_tilt(tv)?;
    if n_draws == 0 {
        return Err(Error::invalid("overlap diagnostic needs at least one draw"));
    }
    if tv.is_zero() {
        return Ok(OverlapReport { ess_ratio: 1.0, warn: false });
    }
    let mut rng = seeded(seed);
    let log_w: Vec<f64> = (0..n_draws)
        .filter_map(|_| {
            let y = obs.sample(&mut rng);
            match obs.support() {
                Support::Identity => Some(tv.dot_stat(y)),
                Support::Log if y > 0.0 => Some(tv.dot_stat(y.ln())),
                Support::Log => None,
            }
        })
        .collect();
    if log_w.is_empty() {
        return Ok(OverlapReport { ess_ratio: 1.0, warn: false });
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (s1, s2) = log_w.iter().fold((0.0, 0.0), |(a, b), lw| {
        let w = (lw - max).exp();
        (a + w, b + w * w)
    });
    let ess_ratio = s1 * s1 / (log_w.len() as f64 * s2);
    Ok(OverlapReport { ess_ratio, warn: ess_ratio < OVERLAP_WARN })
}

/// A point in sensitivity-parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionSpec {
    Logistic(LogisticSelection),
    LatentClass(LatentClassSelection),
}

impl SelectionSpec {
    pub fn null() -> Self {
        SelectionSpec::Logistic(LogisticSelection::default())
    }

    pub fn is_null(&self) -> bool {
        match self {
            SelectionSpec::Logistic(s) => s.is_null(),
            SelectionSpec::LatentClass(s) => s.omega.iter().all(|w| *w == Omega::ZERO),
        }
    }

    /// Missing arm-`arm` outcome model for a unit whose observed-arm
    /// conditional is `obs`. Never uses the intercepts.
    pub fn missing(&self, obs: &MixtureDist, arm: Arm) -> Result<MixtureDist> {
        match self {
            SelectionSpec::Logistic(sel) => {
                let tilted = obs.tilt(&tilt_for_arm(sel, arm))?;
                Ok(tilted.shift_zero_atom(zero_shift_for_arm(sel, arm)))
            }
            SelectionSpec::LatentClass(sel) => {
                let omega = sel.omega[arm.index()];
                match obs.len() {
                    1 => Ok(obs.clone()),
                    2 => {
                        if omega == Omega::ZERO {
                            return Ok(obs.clone());
                        }
                        let pi = obs.continuous_weights()[0];
                        let pi_mis = latent_class_missing_weight(pi, omega);
                        Ok(obs.reweighted(&[pi_mis, 1.0 - pi_mis]))
                    }
                    k => Err(Error::invalid(format!("latent-class selection needs at most two components, got {k}"))),
                }
            }
        }
    }

    /// Checks the tilt is proper for `obs` without building it.
    pub fn check(&self, obs: &MixtureDist, arm: Arm) -> Result<()> {
        match self {
            SelectionSpec::Logistic(sel) => obs.check_tilt(&tilt_for_arm(sel, arm)),
            SelectionSpec::LatentClass(_) => Ok(()),
        }
    }
}
