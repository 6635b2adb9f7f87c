use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_n, Simulated, Truth};
use crate::error::{Error, Result};
use crate::observed::Dataset;
use crate::rng::seeded;
use crate::selection::Arm;
use crate::stats::expit;

/// Binary outcome with a Normal latent confounder:
/// `X ~ U(-x_range, x_range)`, `U ~ N(0, 1)`,
/// `T | U, X ~ Bern(expit(beta X + psi_t U))`,
/// `Y(t) | U, X ~ Bern(expit(alpha X + psi_y U))`.
///
/// With `psi_t` and `psi_y` of opposite sign the observed mean
/// `E[Y | X, T = 0]` is not monotone in `X` even though every
/// outcome model is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryNormalDgp {
    pub beta: f64,
    pub psi_t: f64,
    pub alpha: f64,
    pub psi_y: f64,
    pub x_range: f64,
}

impl Default for BinaryNormalDgp {
    fn default() -> Self {
        Self { beta: 2.0, psi_t: -2.0, alpha: -0.5, psi_y: 2.0, x_range: 3.0 }
    }
}

pub fn gen_binary_normal_confounder(dgp: &BinaryNormalDgp, n: usize, seed: u64) -> Result<Simulated> {
    check_n(n)?;
    if !(dgp.x_range > 0.0 && dgp.x_range.is_finite()) {
        return Err(Error::invalid("x_range must be positive"));
    }
    let mut rng = seeded(seed);
    let (mut y, mut t, mut x) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut truth = Truth { u: Vec::with_capacity(n), y0: Vec::with_capacity(n), y1: Vec::with_capacity(n) };
    for _ in 0..n {
        let xi = rng.random_range(-dgp.x_range..dgp.x_range);
        let u: f64 = StandardNormal.sample(&mut rng);
        let arm = if rng.random::<f64>() < expit(dgp.beta * xi + dgp.psi_t * u) { Arm::Treated } else { Arm::Control };
        let yv = if rng.random::<f64>() < expit(dgp.alpha * xi + dgp.psi_y * u) { 1.0 } else { 0.0 };
        y.push(yv);
        t.push(arm);
        x.push(vec![xi]);
        truth.u.push(u);
        truth.y0.push(yv);
        truth.y1.push(yv);
    }
    let data = Dataset::new(y, t, x, None, vec!["x".into()])?;
    Ok(Simulated { data, truth })
}

/// Mean outcome of arm-`arm` units in `bins` equal-width bins of covariate
/// `j` over `[lo, hi)`: `(bin centre, mean, count)`. Empty bins are skipped.
pub fn binned_arm_means(data: &Dataset, arm: Arm, j: usize, lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![(0.0, 0usize); bins];
    for i in data.arm_indices(arm) {
        let v = data.x()[i][j];
        if v < lo || v >= hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        sums[b].0 += data.y()[i];
        sums[b].1 += 1;
    }
    sums.iter()
        .enumerate()
        .filter(|(_, s)| s.1 > 0)
        .map(|(b, s)| (lo + width * (b as f64 + 0.5), s.0 / s.1 as f64, s.1))
        .collect()
}

/// Number of sign changes between successive differences.
pub fn turning_points(values: &[f64]) -> usize {
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    d.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}
