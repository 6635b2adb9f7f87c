//! Gaussian-mixture EM for pooled one-dimensional samples.

use rand::Rng;

use crate::ef::{MixtureDist, UnivariateEF};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::{log_sum_exp, mean, norm_logpdf, pop_variance};

pub const MAX_ITER: usize = 500;
pub const REL_TOL: f64 = 1e-8;
/// Variance floor as a fraction of the sample variance.
pub const VAR_FLOOR: f64 = 1e-6;

/// Plain parameter vectors; converted to a [`MixtureDist`] at the end.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Gmm {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

impl Gmm {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn from_mixture(mix: &MixtureDist) -> Self {
        Self {
            weights: mix.continuous_weights(),
            means: mix.components().iter().map(|c| c.mean()).collect(),
            vars: mix.components().iter().map(|c| c.variance()).collect(),
        }
    }

    pub fn log_component(&self, k: usize, y: f64) -> f64 {
        let sd = self.vars[k].sqrt();
        norm_logpdf((y - self.means[k]) / sd) - sd.ln()
    }

    pub fn log_likelihood(&self, ys: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k()];
        ys.iter()
            .map(|&y| {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = self.weights[k].ln() + self.log_component(k, y);
                }
                log_sum_exp(&buf)
            })
            .sum()
    }

    pub fn sort_by_mean(&mut self) {
        let mut idx: Vec<usize> = (0..self.k()).collect();
        idx.sort_by(|&a, &b| self.means[a].total_cmp(&self.means[b]));
        self.weights = idx.iter().map(|&i| self.weights[i]).collect();
        self.means = idx.iter().map(|&i| self.means[i]).collect();
        self.vars = idx.iter().map(|&i| self.vars[i]).collect();
    }

    pub fn to_mixture(&self) -> Result<MixtureDist> {
        let comps =
            self.means.iter().zip(&self.vars).map(|(&m, &v)| UnivariateEF::normal(m, v)).collect::<Result<Vec<_>>>()?;
        let total: f64 = self.weights.iter().sum();
        MixtureDist::new(comps, self.weights.iter().map(|w| w / total).collect())
    }

    /// Responsibilities (row-major, `n x k`) and the log-likelihood.
    pub fn e_step(&self, ys: &[f64], resp: &mut [f64]) -> f64 {
        let k = self.k();
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let mut ll = 0.0;
        for (i, &y) in ys.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for j in 0..k {
                row[j] = log_w[j] + self.log_component(j, y);
            }
            let lse = log_sum_exp(row);
            ll += lse;
            for r in row.iter_mut() {
                *r = (*r - lse).exp();
            }
        }
        ll
    }

    /// Weighted Normal updates for means and variances from
    /// responsibilities; mixing weights are left to the caller.
    pub fn m_step_components(&mut self, ys: &[f64], resp: &[f64], floor: f64) -> Vec<f64> {
        let k = self.k();
        let mut nk = vec![0.0; k];
        let mut sum = vec![0.0; k];
        for (i, &y) in ys.iter().enumerate() {
            for j in 0..k {
                let r = resp[i * k + j];
                nk[j] += r;
                sum[j] += r * y;
            }
        }
        for j in 0..k {
            if nk[j] > 0.0 {
                self.means[j] = sum[j] / nk[j];
            }
        }
        let mut ss = vec![0.0; k];
        for (i, &y) in ys.iter().enumerate() {
            for j in 0..k {
                let d = y - self.means[j];
                ss[j] += resp[i * k + j] * d * d;
            }
        }
        for j in 0..k {
            if nk[j] > 0.0 {
                self.vars[j] = (ss[j] / nk[j]).max(floor);
            }
        }
        nk
    }
}

/// k-means++ seeding followed by nearest-centre hard assignment.
pub(crate) fn kmeanspp_init<R: Rng + ?Sized>(ys: &[f64], k: usize, floor: f64, rng: &mut R) -> Gmm {
    let n = ys.len();
    let mut centres = vec![ys[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = ys.iter().map(|y| (y - centres[0]).powi(2)).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            ys[pick]
        } else {
            ys[rng.random_range(0..n)]
        };
        centres.push(next);
        for (d, y) in d2.iter_mut().zip(ys) {
            *d = d.min((y - next).powi(2));
        }
    }
    let mut count = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for &y in ys {
        let j = (0..k).min_by(|&a, &b| (y - centres[a]).abs().total_cmp(&(y - centres[b]).abs())).unwrap_or(0);
        count[j] += 1.0;
        sum[j] += y;
        sq[j] += y * y;
    }
    let overall = pop_variance(ys).max(floor);
    let mut g = Gmm { weights: vec![0.0; k], means: centres.clone(), vars: vec![overall; k] };
    for j in 0..k {
        // empty clusters keep their centre with the pooled variance and a token weight
        if count[j] > 0.0 {
            let m = sum[j] / count[j];
            g.means[j] = m;
            g.vars[j] = (sq[j] / count[j] - m * m).max(floor).max(overall * 1e-3);
            g.weights[j] = count[j] / n as f64;
        } else {
            g.weights[j] = 1.0 / n as f64;
        }
    }
    let total: f64 = g.weights.iter().sum();
    g.weights.iter_mut().for_each(|w| *w /= total);
    g
}

/// Runs EM from `g` to convergence; returns the log-likelihood trace.
pub(crate) fn run_em(ys: &[f64], g: &mut Gmm, floor: f64) -> Vec<f64> {
    let n = ys.len();
    let k = g.k();
    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..MAX_ITER {
        let ll = g.e_step(ys, &mut resp);
        trace.push(ll);
        if (ll - prev).abs() <= REL_TOL * ll.abs() {
            break;
        }
        prev = ll;
        let nk = g.m_step_components(ys, &resp, floor);
        for (w, c) in g.weights.iter_mut().zip(&nk) {
            *w = c / n as f64;
        }
    }
    trace
}

fn check_degenerate(g: &Gmm, n: usize) -> Result<()> {
    let floor = 1.0 / (10.0 * n as f64);
    match g.weights.iter().copied().find(|&w| w < floor) {
        Some(weight) => Err(Error::DegenerateFit { weight, floor }),
        None => Ok(()),
    }
}

/// Closed-form single Normal (maximum likelihood).
pub fn fit_single(ys: &[f64]) -> Result<MixtureDist> {
    if ys.len() < 5 {
        return Err(Error::invalid(format!("need at least 5 samples, got {}", ys.len())));
    }
    let v = pop_variance(ys);
    let floor = VAR_FLOOR * v.max(f64::MIN_POSITIVE);
    Ok(MixtureDist::single(UnivariateEF::normal(mean(ys), v.max(floor))?))
}

/// Best of `restarts` k-means++-seeded EM runs, components sorted by mean.
pub fn em_fit(ys: &[f64], k: usize, restarts: usize, seed: u64) -> Result<MixtureDist> {
    Ok(em_fit_traced(ys, k, restarts, seed)?.0)
}

/// As [`em_fit`], also returning the log-likelihood trace of the winning run.
pub fn em_fit_traced(ys: &[f64], k: usize, restarts: usize, seed: u64) -> Result<(MixtureDist, Vec<f64>)> {
    validate(ys, k)?;
    if k == 1 {
        let m = fit_single(ys)?;
        let ll = Gmm::from_mixture(&m).log_likelihood(ys);
        return Ok((m, vec![ll]));
    }
    let floor = VAR_FLOOR * pop_variance(ys);
    let mut best: Option<(Gmm, Vec<f64>)> = None;
    let mut last_err = None;
    for r in 0..restarts.max(1) {
        let mut rng = substream(seed, r as u64);
        let mut g = kmeanspp_init(ys, k, floor, &mut rng);
        let trace = run_em(ys, &mut g, floor);
        if let Err(e) = check_degenerate(&g, ys.len()) {
            last_err = Some(e);
            continue;
        }
        let ll = *trace.last().unwrap_or(&f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(_, t)| ll > *t.last().unwrap_or(&f64::NEG_INFINITY)) {
            best = Some((g, trace));
        }
    }
    let (mut g, trace) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::invalid("no EM restart succeeded"))),
    };
    g.sort_by_mean();
    Ok((g.to_mixture()?, trace))
}

/// EM started from an existing fit (used for bootstrap refits).
pub fn em_refit(ys: &[f64], init: &MixtureDist) -> Result<MixtureDist> {
    let k = init.len();
    validate(ys, k)?;
    if k == 1 {
        return fit_single(ys);
    }
    let floor = VAR_FLOOR * pop_variance(ys);
    let mut g = Gmm::from_mixture(init);
    run_em(ys, &mut g, floor);
    check_degenerate(&g, ys.len())?;
    g.sort_by_mean();
    g.to_mixture()
}

fn validate(ys: &[f64], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("mixture needs K >= 1"));
    }
    if ys.len() < 5 * k {
        return Err(Error::invalid(format!("need n >= 5K = {} samples, got {}", 5 * k, ys.len())));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    if pop_variance(ys) <= 0.0 {
        return Err(Error::invalid("samples have zero variance"));
    }
    Ok(())
}
