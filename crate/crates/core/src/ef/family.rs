use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{expit, logit, norm_cdf, norm_logpdf, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli,
    Normal,
}

/// Coefficients multiplying the sufficient statistics `(y, y^2)` in the
/// log-odds of selection. The quadratic slot is only meaningful for the
/// Normal family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TiltVector {
    pub linear: f64,
    pub quadratic: f64,
}

impl TiltVector {
    pub const ZERO: TiltVector = TiltVector { linear: 0.0, quadratic: 0.0 };

    pub fn new(linear: f64, quadratic: f64) -> Self {
        Self { linear, quadratic }
    }

    pub fn linear(linear: f64) -> Self {
        Self { linear, quadratic: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.linear == 0.0 && self.quadratic == 0.0
    }

    /// `tv . s(y)` with `s(y) = (y, y^2)`.
    pub fn dot_stat(&self, y: f64) -> f64 {
        if self.quadratic == 0.0 {
            self.linear * y
        } else {
            self.linear * y + self.quadratic * y * y
        }
    }
}

impl std::ops::Add for TiltVector {
    type Output = TiltVector;
    fn add(self, rhs: TiltVector) -> TiltVector {
        TiltVector::new(self.linear + rhs.linear, self.quadratic + rhs.quadratic)
    }
}

impl std::ops::Neg for TiltVector {
    type Output = TiltVector;
    fn neg(self) -> TiltVector {
        TiltVector::new(-self.linear, -self.quadratic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Params {
    Bernoulli { p: f64, eta: f64 },
    Normal { mean: f64, var: f64, eta1: f64, eta2: f64 },
}

/// A univariate exponential-family distribution carrying both its mean
/// parameters and its natural parameters.
///
/// Bernoulli: `eta = logit(p)`, `A(eta) = ln(1 + e^eta)`.
/// Normal: `eta = (mu / s2, -1 / (2 s2))`, `A(eta) = -eta1^2 / (4 eta2) - ln(-2 eta2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateEF {
    params: Params,
}

impl UnivariateEF {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("Bernoulli p = {p} must lie in (0, 1)")));
        }
        Ok(Self { params: Params::Bernoulli { p, eta: logit(p) } })
    }

    pub fn normal(mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
            return Err(Error::invalid(format!("Normal({mean}, {var}) needs finite mean and variance > 0")));
        }
        Ok(Self { params: Params::Normal { mean, var, eta1: mean / var, eta2: -0.5 / var } })
    }

    /// Builds from natural parameters; the second slot is ignored for Bernoulli.
    pub fn from_natural(family: Family, eta: [f64; 2]) -> Result<Self> {
        match family {
            Family::Bernoulli => {
                let p = expit(eta[0]);
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::ProprietyViolation(format!(
                        "natural parameter {} saturates the Bernoulli mean",
                        eta[0]
                    )));
                }
                Ok(Self { params: Params::Bernoulli { p, eta: eta[0] } })
            }
            Family::Normal => {
                if !(eta[1] < 0.0) {
                    return Err(Error::ProprietyViolation(format!(
                        "second natural parameter {} must be negative",
                        eta[1]
                    )));
                }
                let var = -0.5 / eta[1];
                Ok(Self { params: Params::Normal { mean: eta[0] * var, var, eta1: eta[0], eta2: eta[1] } })
            }
        }
    }

    pub fn family(&self) -> Family {
        match self.params {
            Params::Bernoulli { .. } => Family::Bernoulli,
            Params::Normal { .. } => Family::Normal,
        }
    }

    pub fn natural(&self) -> [f64; 2] {
        match self.params {
            Params::Bernoulli { eta, .. } => [eta, 0.0],
            Params::Normal { eta1, eta2, .. } => [eta1, eta2],
        }
    }

    /// Success probability for Bernoulli, `(mean, variance)` for Normal.
    pub fn mean(&self) -> f64 {
        match self.params {
            Params::Bernoulli { p, .. } => p,
            Params::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.params {
            Params::Bernoulli { p, .. } => p * (1.0 - p),
            Params::Normal { var, .. } => var,
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Log-partition function `A(eta)` (so that `g(eta) = exp(-A(eta))`).
    pub fn log_partition(&self) -> f64 {
        match self.params {
            Params::Bernoulli { eta, .. } => softplus(eta),
            Params::Normal { mean, var, .. } => 0.5 * mean * mean / var + 0.5 * var.ln(),
        }
    }

    pub fn check_tilt(&self, tv: &TiltVector) -> Result<()> {
        match self.params {
            Params::Bernoulli { .. } => {
                if tv.quadratic != 0.0 {
                    return Err(Error::FamilyMismatch(
                        "Bernoulli has a single sufficient statistic; quadratic tilt must be 0".into(),
                    ));
                }
                Ok(())
            }
            Params::Normal { var, .. } => {
                let shrink = 1.0 - 2.0 * tv.quadratic * var;
                if !(shrink > 0.0) {
                    return Err(Error::ProprietyViolation(format!(
                        "1 - 2*{}*{} = {} is not positive",
                        tv.quadratic, var, shrink
                    )));
                }
                Ok(())
            }
        }
    }

    /// Exponential tilt: the natural parameter shifts by `tv`.
    pub fn tilt(&self, tv: &TiltVector) -> Result<Self> {
        self.check_tilt(tv)?;
        if tv.is_zero() {
            return Ok(*self);
        }
        match self.params {
            Params::Bernoulli { eta, .. } => Self::from_natural(Family::Bernoulli, [eta + tv.linear, 0.0]),
            Params::Normal { mean, var, .. } => {
                let shrink = 1.0 - 2.0 * tv.quadratic * var;
                Self::normal((mean + tv.linear * var) / shrink, var / shrink)
            }
        }
    }

    /// `ln C(tv) = A(eta + tv) - A(eta)`, the log moment generating function
    /// of the sufficient statistic.
    pub fn log_tilt_normalizer(&self, tv: &TiltVector) -> Result<f64> {
        self.check_tilt(tv)?;
        if tv.is_zero() {
            return Ok(0.0);
        }
        // Closed forms rather than a difference of log-partitions, which
        // cancels badly for small tilts.
        Ok(match self.params {
            Params::Bernoulli { p, eta } => {
                let l = tv.linear;
                if l.abs() < 1.0 {
                    (p * l.exp_m1()).ln_1p()
                } else {
                    softplus(eta + l) - softplus(eta)
                }
            }
            Params::Normal { mean, var, .. } => {
                let (l, q) = (tv.linear, tv.quadratic);
                let shrink = 1.0 - 2.0 * q * var;
                (l * mean + 0.5 * l * l * var + q * mean * mean) / shrink - 0.5 * shrink.ln()
            }
        })
    }

    /// Log density (Normal) or log mass (Bernoulli, support `{0, 1}`).
    pub fn log_density(&self, y: f64) -> f64 {
        match self.params {
            Params::Bernoulli { p, .. } => {
                if y == 1.0 {
                    p.ln()
                } else if y == 0.0 {
                    (1.0 - p).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Params::Normal { mean, var, .. } => {
                let sd = var.sqrt();
                norm_logpdf((y - mean) / sd) - sd.ln()
            }
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        self.log_density(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self.params {
            Params::Bernoulli { p, .. } => {
                if y < 0.0 {
                    0.0
                } else if y < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Params::Normal { mean, var, .. } => norm_cdf((y - mean) / var.sqrt()),
        }
    }
}
