use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::family::{Family, TiltVector, UnivariateEF};
use crate::error::{Error, Result};
use crate::stats::{expit, log_sum_exp, logit, norm_cdf, norm_pdf};

const WEIGHT_TOL: f64 = 1e-9;
const QUANTILE_TOL: f64 = 1e-10;
const BRACKET_SDS: f64 = 12.0;

/// Scale on which mixture components live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// Components describe the outcome itself.
    #[default]
    Identity,
    /// Components describe `ln(y)` of the positive part (semi-continuous
    /// outcomes such as income). Quantiles and moments are reported on the
    /// raw scale.
    Log,
}

/// Finite mixture of one exponential family, with an optional point mass at
/// exactly zero.
///
/// `weights` are absolute: `sum(weights) + zero_atom == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDist {
    components: Vec<UnivariateEF>,
    weights: Vec<f64>,
    zero_atom: f64,
    support: Support,
}

impl MixtureDist {
    /// Mixture without a zero atom. Weights are renormalized when they sum
    /// to one within 1e-9; larger discrepancies are rejected.
    pub fn new(components: Vec<UnivariateEF>, weights: Vec<f64>) -> Result<Self> {
        Self::build(components, weights, 0.0, Support::Identity)
    }

    pub fn single(component: UnivariateEF) -> Self {
        Self { components: vec![component], weights: vec![1.0], zero_atom: 0.0, support: Support::Identity }
    }

    /// `zero_atom` mass at 0 plus `continuous` scaled to `1 - zero_atom`.
    /// `continuous_weights` must sum to one.
    pub fn with_zero_atom(
        components: Vec<UnivariateEF>,
        continuous_weights: Vec<f64>,
        zero_atom: f64,
        support: Support,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&zero_atom) {
            return Err(Error::invalid(format!("zero atom {zero_atom} must lie in [0, 1)")));
        }
        let total: f64 = continuous_weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("continuous weights sum to {total}, expected 1")));
        }
        let weights = continuous_weights.iter().map(|w| w * (1.0 - zero_atom)).collect();
        Self::build(components, weights, zero_atom, support)
    }

    fn build(components: Vec<UnivariateEF>, weights: Vec<f64>, zero_atom: f64, support: Support) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::invalid(format!("{} components but {} weights", components.len(), weights.len())));
        }
        let family = components[0].family();
        if components.iter().any(|c| c.family() != family) {
            return Err(Error::invalid("mixture components must share one family"));
        }
        if family == Family::Bernoulli && (zero_atom > 0.0 || support == Support::Log) {
            return Err(Error::invalid("zero atoms and log support require Normal components"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum::<f64>() + zero_atom;
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("mixture mass sums to {total}, expected 1")));
        }
        let target = 1.0 - zero_atom;
        let cont: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w * target / cont).collect();
        Ok(Self { components, weights, zero_atom, support })
    }

    pub fn components(&self) -> &[UnivariateEF] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn zero_atom(&self) -> f64 {
        self.zero_atom
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn family(&self) -> Family {
        self.components[0].family()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component weights of the continuous part, summing to one.
    pub fn continuous_weights(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn on_log_scale(mut self) -> Result<Self> {
        if self.family() != Family::Normal {
            return Err(Error::invalid("log support requires Normal components"));
        }
        self.support = Support::Log;
        Ok(self)
    }

    pub fn check_tilt(&self, tv: &TiltVector) -> Result<()> {
        self.components.iter().try_for_each(|c| c.check_tilt(tv))
    }

    /// Tilts every component and reweights by the ratio of normalizers,
    /// `w*_k ∝ w_k C_k(tv)`, in log space. The zero atom is left in place.
    pub fn tilt(&self, tv: &TiltVector) -> Result<Self> {
        self.check_tilt(tv)?;
        if tv.is_zero() {
            return Ok(self.clone());
        }
        let mut log_w = Vec::with_capacity(self.len());
        let mut components = Vec::with_capacity(self.len());
        for (c, w) in self.components.iter().zip(&self.weights) {
            log_w.push(w.ln() + c.log_tilt_normalizer(tv)?);
            components.push(c.tilt(tv)?);
        }
        let lse = log_sum_exp(&log_w);
        let mass = 1.0 - self.zero_atom;
        let weights = log_w.iter().map(|lw| mass * (lw - lse).exp()).collect();
        Ok(Self { components, weights, zero_atom: self.zero_atom, support: self.support })
    }

    /// Shifts the log-odds of the zero atom by `delta`. An absent atom stays
    /// absent.
    pub fn shift_zero_atom(&self, delta: f64) -> Self {
        if self.zero_atom == 0.0 || delta == 0.0 {
            return self.clone();
        }
        let atom = expit(logit(self.zero_atom) + delta);
        let cont: f64 = self.weights.iter().sum();
        let weights = self.weights.iter().map(|w| w / cont * (1.0 - atom)).collect();
        Self { components: self.components.clone(), weights, zero_atom: atom, support: self.support }
    }

    /// Replaces the continuous weights, keeping components and atom.
    pub fn reweighted(&self, continuous_weights: &[f64]) -> Self {
        let mass = 1.0 - self.zero_atom;
        let total: f64 = continuous_weights.iter().sum();
        let weights = continuous_weights.iter().map(|w| w / total * mass).collect();
        Self { components: self.components.clone(), weights, zero_atom: self.zero_atom, support: self.support }
    }

    /// Probability-weighted union of mixtures sharing family and support.
    /// Identical components are merged.
    pub fn blend(parts: &[(f64, &MixtureDist)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("blend of zero mixtures"))?.1;
        let family = first.family();
        let support = first.support;
        let mut components: Vec<UnivariateEF> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut atom = 0.0;
        for &(scale, mix) in parts {
            if mix.family() != family || mix.support != support {
                return Err(Error::invalid("blended mixtures must share family and support"));
            }
            atom += scale * mix.zero_atom;
            for (c, w) in mix.components.iter().zip(&mix.weights) {
                let key = (c.mean().to_bits(), c.variance().to_bits());
                match index.get(&key) {
                    Some(&k) => weights[k] += scale * w,
                    None => {
                        index.insert(key, components.len());
                        components.push(*c);
                        weights.push(scale * w);
                    }
                }
            }
        }
        Self::build(components, weights, atom, support)
    }

    /// Mean on the outcome scale.
    pub fn mean(&self) -> f64 {
        match self.support {
            Support::Identity => self.components.iter().zip(&self.weights).map(|(c, w)| w * c.mean()).sum(),
            Support::Log => {
                self.components.iter().zip(&self.weights).map(|(c, w)| w * (c.mean() + 0.5 * c.variance()).exp()).sum()
            }
        }
    }

    /// Variance on the outcome scale.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let second: f64 = match self.support {
            Support::Identity => self
                .components
                .iter()
                .zip(&self.weights)
                .map(|(c, w)| match c.family() {
                    Family::Bernoulli => w * c.mean(),
                    Family::Normal => w * (c.variance() + c.mean() * c.mean()),
                })
                .sum(),
            Support::Log => self
                .components
                .iter()
                .zip(&self.weights)
                .map(|(c, w)| w * (2.0 * c.mean() + 2.0 * c.variance()).exp())
                .sum(),
        };
        (second - m * m).max(0.0)
    }

    /// Variance of the normalized continuous part on the component scale
    /// (the log scale for [`Support::Log`]).
    pub fn component_scale_variance(&self) -> f64 {
        let w = self.continuous_weights();
        let m: f64 = self.components.iter().zip(&w).map(|(c, w)| w * c.mean()).sum();
        let second: f64 = self
            .components
            .iter()
            .zip(&w)
            .map(|(c, w)| match c.family() {
                Family::Bernoulli => w * c.mean(),
                Family::Normal => w * (c.variance() + c.mean() * c.mean()),
            })
            .sum();
        (second - m * m).max(0.0)
    }

    /// Unnormalized CDF of the continuous part on the component scale.
    fn component_scale_cdf(&self, z: f64) -> f64 {
        self.components.iter().zip(&self.weights).map(|(c, w)| w * c.cdf(z)).sum()
    }

    pub fn component_scale_density(&self, z: f64) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| {
                let sd = c.sd();
                w * norm_pdf((z - c.mean()) / sd) / sd
            })
            .sum()
    }

    /// Right-continuous CDF on the outcome scale.
    pub fn cdf(&self, y: f64) -> f64 {
        match self.support {
            Support::Identity => {
                let atom = if y >= 0.0 { self.zero_atom } else { 0.0 };
                (self.component_scale_cdf(y) + atom).min(1.0)
            }
            Support::Log => {
                if y < 0.0 {
                    0.0
                } else if y == 0.0 {
                    self.zero_atom
                } else {
                    (self.zero_atom + self.component_scale_cdf(y.ln())).min(1.0)
                }
            }
        }
    }

    /// Density of the continuous part on the outcome scale (Normal family),
    /// or the probability mass (Bernoulli family).
    pub fn density(&self, y: f64) -> f64 {
        match (self.family(), self.support) {
            (Family::Bernoulli, _) => self.components.iter().zip(&self.weights).map(|(c, w)| w * c.density(y)).sum(),
            (Family::Normal, Support::Identity) => self.component_scale_density(y),
            (Family::Normal, Support::Log) => {
                if y <= 0.0 {
                    0.0
                } else {
                    self.component_scale_density(y.ln()) / y
                }
            }
        }
    }

    /// Generalized inverse `inf { y : F(y) >= q }`.
    ///
    /// Continuous parts are solved by a bracketed Newton iteration (bisection
    /// whenever the Newton step leaves the bracket) until `|F(y) - q| <= 1e-10`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::QuantileOutOfRange(q));
        }
        if self.family() == Family::Bernoulli {
            let p_zero: f64 = self.components.iter().zip(&self.weights).map(|(c, w)| w * (1.0 - c.mean())).sum();
            return Ok(if p_zero >= q { 0.0 } else { 1.0 });
        }
        match self.support {
            Support::Identity => {
                if self.zero_atom > 0.0 {
                    let below = self.component_scale_cdf(0.0);
                    if below < q && q <= below + self.zero_atom {
                        return Ok(0.0);
                    }
                }
                let include_zero = self.zero_atom > 0.0;
                Ok(self.solve_component_scale(q, include_zero, |z| self.cdf(z)))
            }
            Support::Log => {
                if q <= self.zero_atom {
                    return Ok(0.0);
                }
                let atom = self.zero_atom;
                let z = self.solve_component_scale(q, false, |z| atom + self.component_scale_cdf(z));
                Ok(z.exp())
            }
        }
    }

    fn solve_component_scale<F: Fn(f64) -> f64>(&self, q: f64, include_zero: bool, cdf: F) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.components {
            lo = lo.min(c.mean() - BRACKET_SDS * c.sd());
            hi = hi.max(c.mean() + BRACKET_SDS * c.sd());
        }
        if include_zero {
            lo = lo.min(-1e-300);
            hi = hi.max(0.0);
        }
        let mut width = hi - lo;
        while cdf(lo) >= q {
            lo -= width;
            width *= 2.0;
        }
        while cdf(hi) < q {
            hi += width;
            width *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            let f = cdf(x) - q;
            if f.abs() <= QUANTILE_TOL {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
                return hi;
            }
            let slope = self.component_scale_density(x);
            let newton = x - f / slope;
            x = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.zero_atom {
            return 0.0;
        }
        let mut acc = self.zero_atom;
        let mut chosen = self.components.len() - 1;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let c = &self.components[chosen];
        match c.family() {
            Family::Bernoulli => {
                if rng.random::<f64>() < c.mean() {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                let v = c.mean() + c.sd() * z;
                match self.support {
                    Support::Identity => v,
                    Support::Log => v.exp(),
                }
            }
        }
    }
}

/// `sum_k w_k Phi((y - mu_k) / sd_k)` for a Normal mixture given as parallel slices.
pub fn normal_mixture_cdf(weights: &[f64], means: &[f64], sds: &[f64], y: f64) -> f64 {
    weights.iter().zip(means).zip(sds).map(|((w, m), s)| w * norm_cdf((y - m) / s)).sum()
}
