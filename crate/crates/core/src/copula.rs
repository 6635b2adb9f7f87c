//! Joint potential-outcome sampling under a conditional copula.
//!
//! Each draw picks an arm, then a unit of that arm, then couples the
//! unit's observed conditional with its missing conditional through the
//! copula. Marginal contrasts computed from the draws do not depend on the
//! copula, which makes this a Monte-Carlo oracle for the closed-form
//! estimands.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ef::MixtureDist;
use crate::error::{Error, Result};
use crate::estimands::{CompleteDataModel, Estimand, EstimandResult};
use crate::rng::substream;
use crate::selection::Arm;
use crate::stats::{mean, norm_cdf, sample_sd, sort_floats, sorted_quantile};

const CHUNK: usize = 8192;
const BATCHES: usize = 50;
const U_EDGE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaSpec {
    Independence,
    Gaussian(f64),
}

impl CopulaSpec {
    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::invalid(format!("copula correlation {rho} outside (-1, 1)")));
        }
        Ok(CopulaSpec::Gaussian(rho))
    }

    fn rho(self) -> f64 {
        match self {
            CopulaSpec::Independence => 0.0,
            CopulaSpec::Gaussian(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointDraws {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub t: Vec<Arm>,
}

impl JointDraws {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn extend(&mut self, other: JointDraws) {
        self.y0.extend(other.y0);
        self.y1.extend(other.y1);
        self.t.extend(other.t);
    }
}

/// Observed and missing conditionals for every unit of one arm.
struct ArmUnits {
    observed: Vec<MixtureDist>,
    /// Missing other-arm conditionals at these units.
    missing_other: Vec<MixtureDist>,
}

fn unit_tables(model: &CompleteDataModel<'_>) -> Result<[ArmUnits; 2]> {
    let table = |arm: Arm| -> Result<ArmUnits> {
        Ok(ArmUnits { observed: model.fit.arm(arm).observed.clone(), missing_other: model.missing_units(arm.other())? })
    };
    Ok([table(Arm::Control)?, table(Arm::Treated)?])
}

/// `n` joint draws of `(Y(0), Y(1), T)`. Draws are generated in fixed-size
/// chunks, chunk `c` from stream `c` of `seed`, so the output does not
/// depend on `workers`.
pub fn joint_sample(
    model: &CompleteDataModel<'_>,
    copula: CopulaSpec,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<JointDraws> {
    let units = unit_tables(model)?;
    let p1 = model.fit.prevalence.p1();
    let rho = copula.rho();
    let tail = (1.0 - rho * rho).sqrt();
    let chunks = n.div_ceil(CHUNK);
    let draw_chunk = |c: usize| -> Result<JointDraws> {
        let mut rng = substream(seed, c as u64);
        let size = CHUNK.min(n - c * CHUNK);
        let mut out =
            JointDraws { y0: Vec::with_capacity(size), y1: Vec::with_capacity(size), t: Vec::with_capacity(size) };
        for _ in 0..size {
            let arm = if rng.random::<f64>() < p1 { Arm::Treated } else { Arm::Control };
            let table = &units[arm.index()];
            let k = rng.random_range(0..table.observed.len());
            // without counterfactual units the missing side is drawn on its own
            let k_other = if table.missing_other.len() == table.observed.len() {
                k
            } else {
                rng.random_range(0..table.missing_other.len())
            };
            let z_own: f64 = StandardNormal.sample(&mut rng);
            let z_free: f64 = StandardNormal.sample(&mut rng);
            let z_other = rho * z_own + tail * z_free;
            let u = |z: f64| norm_cdf(z).clamp(U_EDGE, 1.0 - U_EDGE);
            let own = table.observed[k].quantile(u(z_own))?;
            let other = table.missing_other[k_other].quantile(u(z_other))?;
            let (y0, y1) = if arm == Arm::Treated { (other, own) } else { (own, other) };
            out.y0.push(y0);
            out.y1.push(y1);
            out.t.push(arm);
        }
        Ok(out)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let parts = pool.install(|| (0..chunks).into_par_iter().map(draw_chunk).collect::<Result<Vec<_>>>())?;
    let mut all = JointDraws::default();
    for p in parts {
        all.extend(p);
    }
    Ok(all)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimand: Estimand,
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

impl MonteCarloEstimate {
    /// Normal-theory interval at `level`.
    pub fn to_result(&self, level: f64) -> Result<EstimandResult> {
        let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
        Ok(EstimandResult {
            estimand: self.estimand,
            estimate: self.estimate,
            lo: self.estimate - z * self.se,
            hi: self.estimate + z * self.se,
            n_draws: self.n,
        })
    }
}

fn contrast(draws: &JointDraws, range: std::ops::Range<usize>, estimand: Estimand) -> Result<f64> {
    let keep = |i: &usize| match estimand {
        Estimand::Att => draws.t[*i] == Arm::Treated,
        Estimand::Atc => draws.t[*i] == Arm::Control,
        _ => true,
    };
    let idx: Vec<usize> = range.filter(keep).collect();
    if idx.is_empty() {
        return Err(Error::EmptyStratum("no draws in the requested arm".into()));
    }
    match estimand {
        Estimand::Qte(q) => {
            let mut a: Vec<f64> = idx.iter().map(|&i| draws.y1[i]).collect();
            let mut b: Vec<f64> = idx.iter().map(|&i| draws.y0[i]).collect();
            sort_floats(&mut a);
            sort_floats(&mut b);
            Ok(sorted_quantile(&a, q) - sorted_quantile(&b, q))
        }
        _ => Ok(mean(&idx.iter().map(|&i| draws.y1[i] - draws.y0[i]).collect::<Vec<_>>())),
    }
}

/// Estimand from joint draws; the standard error comes from batch means.
pub fn estimand_via_joint(draws: &JointDraws, estimand: Estimand) -> Result<MonteCarloEstimate> {
    if let Estimand::Qte(q) = estimand {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::QuantileOutOfRange(q));
        }
    }
    let n = draws.len();
    if n < BATCHES * 2 {
        return Err(Error::invalid(format!("need at least {} draws", BATCHES * 2)));
    }
    let estimate = contrast(draws, 0..n, estimand)?;
    let size = n / BATCHES;
    let batch =
        (0..BATCHES).map(|b| contrast(draws, b * size..(b + 1) * size, estimand)).collect::<Result<Vec<_>>>()?;
    // batch estimates each use n/B draws
    let se = sample_sd(&batch) / (BATCHES as f64).sqrt();
    Ok(MonteCarloEstimate { estimand, estimate, se, n })
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, mb) = (mean(&ra), mean(&rb));
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef::UnivariateEF;
    use crate::observed::ObservedFit;
    use crate::selection::{LogisticSelection, SelectionSpec, TreatmentPrevalence};

    fn fit() -> ObservedFit {
        ObservedFit::pooled(
            TreatmentPrevalence::new(0.4).unwrap(),
            MixtureDist::single(UnivariateEF::normal(0.0, 1.0).unwrap()),
            MixtureDist::single(UnivariateEF::normal(1.0, 2.0).unwrap()),
        )
    }

    #[test]
    fn gaussian_rank_correlation() {
        let f = fit();
        let m = CompleteDataModel::new(&f, SelectionSpec::null());
        let d = joint_sample(&m, CopulaSpec::gaussian(0.8).unwrap(), 20_000, 3, 1).unwrap();
        let expect = 6.0 / std::f64::consts::PI * (0.4f64).asin();
        let r = spearman(&d.y0, &d.y1);
        // se of Spearman's rho is about (1 - r^2) / sqrt(n)
        assert!((r - expect).abs() < 3.0 * (1.0 - expect * expect) / (20_000f64).sqrt() + 1e-3, "{r} {expect}");
    }

    #[test]
    fn independence_is_uncorrelated() {
        let f = fit();
        let m = CompleteDataModel::new(&f, SelectionSpec::null());
        let d = joint_sample(&m, CopulaSpec::Independence, 20_000, 4, 1).unwrap();
        assert!(spearman(&d.y0, &d.y1).abs() < 3.0 / (20_000f64).sqrt());
    }

    #[test]
    fn worker_count_does_not_change_draws() {
        let f = fit();
        let m = CompleteDataModel::new(&f, SelectionSpec::Logistic(LogisticSelection::linear(0.2, -0.1)));
        let a = joint_sample(&m, CopulaSpec::Gaussian(0.3), 20_000, 9, 1).unwrap();
        let b = joint_sample(&m, CopulaSpec::Gaussian(0.3), 20_000, 9, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ate_matches_closed_form() {
        let f = fit();
        let m = CompleteDataModel::new(&f, SelectionSpec::Logistic(LogisticSelection::linear(0.3, 0.2)));
        let d = joint_sample(&m, CopulaSpec::Gaussian(-0.5), 50_000, 5, 1).unwrap();
        let mc = estimand_via_joint(&d, Estimand::Ate).unwrap();
        let exact = m.point(Estimand::Ate).unwrap();
        assert!((mc.estimate - exact).abs() < 3.0 * mc.se, "{mc:?} vs {exact}");
    }
}
