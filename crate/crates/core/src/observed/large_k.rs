//! Truncated stick-breaking mixture with data-driven component count.
//!
//! Mean-field variational inference for a Dirichlet-process mixture of
//! Normals truncated at `k_max` sticks, with a Normal-Gamma prior on each
//! component's mean and precision. Sticks whose removal raises the
//! evidence lower bound are dropped, components below [`PRUNE`] weight are
//! pruned, and the survivors are polished by maximum-likelihood EM.

use statrs::function::gamma::{digamma, ln_gamma};

use super::em::{kmeanspp_init, run_em, Gmm, MAX_ITER, VAR_FLOOR};
use crate::ef::MixtureDist;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stats::{log_sum_exp, mean, pop_variance, LN_SQRT_2PI};

pub const PRUNE: f64 = 1e-4;
/// Prior pseudo-count on each component mean.
const MEAN_STRENGTH: f64 = 1e-2;
/// Gamma shape of the precision prior.
const PREC_SHAPE: f64 = 1.0;

pub fn fit_large_k(ys: &[f64], k_max: usize, concentration: f64, seed: u64) -> Result<MixtureDist> {
    if k_max == 0 {
        return Err(Error::invalid("truncation level must be at least 1"));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::invalid(format!("concentration {concentration} must be positive")));
    }
    let n = ys.len();
    if n < 5 {
        return Err(Error::invalid(format!("need at least 5 samples, got {n}")));
    }
    let var = pop_variance(ys);
    if !(var > 0.0) {
        return Err(Error::invalid("samples have zero variance"));
    }
    let single = super::em::fit_single(ys)?;
    if k_max == 1 {
        return Ok(single);
    }
    let k = k_max.min(n / 5).max(1);
    let floor = VAR_FLOOR * var;

    let prior = Prior { alpha: concentration, m0: mean(ys), b0: PREC_SHAPE * var };

    let mut rng = seeded(seed);
    let init = kmeanspp_init(ys, k, floor, &mut rng);
    let mut resp = vec![0.0; n * k];
    for (i, &y) in ys.iter().enumerate() {
        let j = (0..k).min_by(|&a, &b| (y - init.means[a]).abs().total_cmp(&(y - init.means[b]).abs())).unwrap_or(0);
        resp[i * k + j] = 1.0;
    }
    sort_sticks(&mut resp, k);
    let mut q = coordinate_ascent(ys, &mut resp, k, &prior);
    let mut bound = elbo(ys, &resp, &q, &prior);

    // Coordinate ascent collapses surplus sticks slowly when components
    // overlap; try removing each occupied stick and keep removals that
    // raise the bound.
    loop {
        let stats = Suff::from_resp(ys, &resp, k);
        let mut occupied: Vec<usize> = (0..k).filter(|&j| stats.nk[j] >= PRUNE * n as f64).collect();
        if occupied.len() <= 1 {
            break;
        }
        occupied.sort_by(|&a, &b| stats.nk[a].total_cmp(&stats.nk[b]));
        let mut accepted = false;
        for &j in &occupied {
            let mut trial = resp.clone();
            if !remove_stick(&mut trial, k, j) {
                continue;
            }
            sort_sticks(&mut trial, k);
            let tq = coordinate_ascent(ys, &mut trial, k, &prior);
            let tb = elbo(ys, &trial, &tq, &prior);
            if tb > bound {
                resp = trial;
                q = tq;
                bound = tb;
                accepted = true;
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    let stats = Suff::from_resp(ys, &resp, k);

    let mut g = Gmm { weights: Vec::new(), means: Vec::new(), vars: Vec::new() };
    for j in 0..k {
        let w = stats.nk[j] / n as f64;
        if w >= PRUNE {
            g.weights.push(w);
            g.means.push(q.m[j]);
            g.vars.push((q.b[j] / q.a[j]).max(floor));
        }
    }
    if g.k() <= 1 {
        return Ok(single);
    }
    let total: f64 = g.weights.iter().sum();
    g.weights.iter_mut().for_each(|w| *w /= total);
    let before = g.clone();
    run_em(ys, &mut g, floor);
    let min_weight = 1.0 / (10.0 * n as f64);
    if g.weights.iter().any(|&w| w < min_weight) {
        g = before;
    }
    g.sort_by_mean();
    let fitted = g.to_mixture()?;
    let single_ll = Gmm::from_mixture(&single).log_likelihood(ys);
    if g.log_likelihood(ys) < single_ll {
        return Ok(single);
    }
    Ok(fitted)
}

struct Prior {
    alpha: f64,
    m0: f64,
    b0: f64,
}

fn coordinate_ascent(ys: &[f64], resp: &mut [f64], k: usize, prior: &Prior) -> Posterior {
    let n = ys.len();
    let mut q = Posterior::new(k);
    let mut prev_nk = vec![f64::INFINITY; k];
    for _ in 0..MAX_ITER {
        let stats = Suff::from_resp(ys, resp, k);
        q.update(&stats, prior);
        let moved = stats.nk.iter().zip(&prev_nk).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev_nk = stats.nk;
        if moved <= 1e-6 * n as f64 {
            break;
        }
        q.responsibilities(ys, resp);
    }
    q
}

/// Moves stick `j`'s responsibility onto the remaining sticks in
/// proportion to their current share. Returns false when some unit has no
/// other stick to go to.
fn remove_stick(resp: &mut [f64], k: usize, j: usize) -> bool {
    for row in resp.chunks_mut(k) {
        let rest = 1.0 - row[j];
        if rest <= 1e-300 {
            return false;
        }
        row[j] = 0.0;
        row.iter_mut().for_each(|r| *r /= rest);
    }
    true
}

/// Reorders columns so stick sizes decrease.
fn sort_sticks(resp: &mut [f64], k: usize) {
    let mut nk = vec![0.0; k];
    for row in resp.chunks(k) {
        for j in 0..k {
            nk[j] += row[j];
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| nk[b].total_cmp(&nk[a]));
    let mut tmp = vec![0.0; k];
    for row in resp.chunks_mut(k) {
        for (dst, &src) in tmp.iter_mut().zip(&order) {
            *dst = row[src];
        }
        row.copy_from_slice(&tmp);
    }
}

/// Evidence lower bound for the current responsibilities and factors.
fn elbo(ys: &[f64], resp: &[f64], q: &Posterior, prior: &Prior) -> f64 {
    let k = q.m.len();
    let log_pi = q.log_pi();
    let e_log_prec: Vec<f64> = (0..k).map(|j| digamma(q.a[j]) - q.b[j].ln()).collect();
    let e_prec: Vec<f64> = (0..k).map(|j| q.a[j] / q.b[j]).collect();
    let mut total = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            if r > 0.0 {
                let ell =
                    0.5 * e_log_prec[j] - LN_SQRT_2PI - 0.5 * (1.0 / q.beta[j] + e_prec[j] * (y - q.m[j]).powi(2));
                total += r * (log_pi[j] + ell - r.ln());
            }
        }
    }
    for j in 0..k.saturating_sub(1) {
        let (a, b) = (q.stick_a[j], q.stick_b[j]);
        let kl = -prior.alpha.ln() - ln_beta(a, b)
            + (a - 1.0) * digamma(a)
            + (b - prior.alpha) * digamma(b)
            + (prior.alpha + 1.0 - a - b) * digamma(a + b);
        total -= kl;
    }
    for j in 0..k {
        let (a, b) = (q.a[j], q.b[j]);
        let kl_gamma = (a - PREC_SHAPE) * digamma(a) - ln_gamma(a)
            + ln_gamma(PREC_SHAPE)
            + PREC_SHAPE * (b.ln() - prior.b0.ln())
            + a * (prior.b0 - b) / b;
        let ratio = MEAN_STRENGTH / q.beta[j];
        let kl_mean = 0.5 * (ratio - 1.0 - ratio.ln() + MEAN_STRENGTH * (a / b) * (q.m[j] - prior.m0).powi(2));
        total -= kl_gamma + kl_mean;
    }
    total
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

struct Suff {
    nk: Vec<f64>,
    xbar: Vec<f64>,
    ss: Vec<f64>,
}

impl Suff {
    fn from_resp(ys: &[f64], resp: &[f64], k: usize) -> Self {
        let mut nk = vec![0.0; k];
        let mut sum = vec![0.0; k];
        for (i, &y) in ys.iter().enumerate() {
            for j in 0..k {
                nk[j] += resp[i * k + j];
                sum[j] += resp[i * k + j] * y;
            }
        }
        let xbar: Vec<f64> = (0..k).map(|j| if nk[j] > 0.0 { sum[j] / nk[j] } else { 0.0 }).collect();
        let mut ss = vec![0.0; k];
        for (i, &y) in ys.iter().enumerate() {
            for j in 0..k {
                ss[j] += resp[i * k + j] * (y - xbar[j]).powi(2);
            }
        }
        Self { nk, xbar, ss }
    }
}

/// Variational factors: Beta sticks and Normal-Gamma components.
struct Posterior {
    stick_a: Vec<f64>,
    stick_b: Vec<f64>,
    beta: Vec<f64>,
    m: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Posterior {
    fn new(k: usize) -> Self {
        Self {
            stick_a: vec![1.0; k],
            stick_b: vec![1.0; k],
            beta: vec![1.0; k],
            m: vec![0.0; k],
            a: vec![1.0; k],
            b: vec![1.0; k],
        }
    }

    fn update(&mut self, s: &Suff, prior: &Prior) {
        let (alpha, m0, b0) = (prior.alpha, prior.m0, prior.b0);
        let k = s.nk.len();
        let mut tail: f64 = s.nk.iter().sum();
        for j in 0..k {
            tail -= s.nk[j];
            self.stick_a[j] = 1.0 + s.nk[j];
            self.stick_b[j] = alpha + tail.max(0.0);
            self.beta[j] = MEAN_STRENGTH + s.nk[j];
            self.m[j] = (MEAN_STRENGTH * m0 + s.nk[j] * s.xbar[j]) / self.beta[j];
            self.a[j] = PREC_SHAPE + 0.5 * s.nk[j];
            self.b[j] = b0 + 0.5 * (s.ss[j] + MEAN_STRENGTH * s.nk[j] * (s.xbar[j] - m0).powi(2) / self.beta[j]);
        }
    }

    fn log_pi(&self) -> Vec<f64> {
        let k = self.m.len();
        let mut out = Vec::with_capacity(k);
        let mut acc = 0.0;
        for j in 0..k {
            if j + 1 == k {
                out.push(acc);
            } else {
                let d = digamma(self.stick_a[j] + self.stick_b[j]);
                out.push(acc + digamma(self.stick_a[j]) - d);
                acc += digamma(self.stick_b[j]) - d;
            }
        }
        out
    }

    fn responsibilities(&self, ys: &[f64], resp: &mut [f64]) {
        let k = self.m.len();
        let log_pi = self.log_pi();
        let e_log_prec: Vec<f64> = (0..k).map(|j| digamma(self.a[j]) - self.b[j].ln()).collect();
        let e_prec: Vec<f64> = (0..k).map(|j| self.a[j] / self.b[j]).collect();
        for (i, &y) in ys.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for j in 0..k {
                row[j] = log_pi[j] + 0.5 * e_log_prec[j]
                    - LN_SQRT_2PI
                    - 0.5 * (1.0 / self.beta[j] + e_prec[j] * (y - self.m[j]).powi(2));
            }
            let lse = log_sum_exp(row);
            row.iter_mut().for_each(|r| *r = (*r - lse).exp());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observed::em::em_fit;
    use rand_distr::{Distribution, Normal};

    fn draws(n: usize, seed: u64, bimodal: bool) -> Vec<f64> {
        let mut rng = seeded(seed);
        let a = Normal::new(0.0, 1.0).unwrap();
        let b = Normal::new(6.0, 1.5).unwrap();
        (0..n).map(|i| if bimodal && i % 3 == 0 { b.sample(&mut rng) } else { a.sample(&mut rng) }).collect()
    }

    #[test]
    fn unimodal_collapses() {
        let ys = draws(3000, 1, false);
        let m = fit_large_k(&ys, 10, 1.0, 4).unwrap();
        assert!(m.len() <= 2, "{} components", m.len());
    }

    #[test]
    fn bimodal_keeps_two() {
        let ys = draws(3000, 2, true);
        let m = fit_large_k(&ys, 10, 1.0, 4).unwrap();
        assert!(m.len() >= 2);
        assert!((m.mean() - mean(&ys)).abs() < 0.05);
    }

    #[test]
    fn nests_single_component() {
        let ys = draws(2000, 3, true);
        let m = fit_large_k(&ys, 8, 1.0, 1).unwrap();
        let single = em_fit(&ys, 1, 1, 0).unwrap();
        let ll = |mix: &MixtureDist| Gmm::from_mixture(mix).log_likelihood(&ys);
        assert!(ll(&m) >= ll(&single));
    }

    #[test]
    fn tiny_concentration_gives_one_component() {
        let ys = draws(2000, 5, false);
        let m = fit_large_k(&ys, 10, 1e-6, 2).unwrap();
        assert_eq!(m.len(), 1);
    }
}
