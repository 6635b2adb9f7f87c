use rand::Rng;
use rayon::prelude::*;

use super::dataset::Dataset;
use super::fit::ObservedFit;
use super::model::{Fitted, Model};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::selection::Arm;

const ATTEMPTS: usize = 5;

/// Parametric bootstrap: replicate `b` resamples `(x, t)` rows with
/// replacement, draws each outcome from the fitted conditional of the
/// resampled unit, and refits. Replicate `b` uses seed `seed + b`.
/// Replicates run on the current rayon pool and are returned in order.
pub fn bootstrap_draws(
    data: &Dataset,
    model: &Model,
    fitted: &Fitted,
    b: usize,
    seed: u64,
) -> Result<Vec<ObservedFit>> {
    let position = arm_positions(data);
    (0..b as u64).into_par_iter().map(|r| replicate(data, model, fitted, &position, seed.wrapping_add(r))).collect()
}

fn arm_positions(data: &Dataset) -> Vec<usize> {
    let mut counts = [0usize; 2];
    data.t()
        .iter()
        .map(|t| {
            let k = counts[t.index()];
            counts[t.index()] += 1;
            k
        })
        .collect()
}

fn replicate(data: &Dataset, model: &Model, fitted: &Fitted, position: &[usize], seed: u64) -> Result<ObservedFit> {
    let n = data.len();
    let mut rng = seeded(seed);
    let mut last = None;
    for _ in 0..ATTEMPTS {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let treated = idx.iter().filter(|&&i| data.t()[i] == Arm::Treated).count();
        if treated == 0 || treated == n {
            continue;
        }
        let y: Vec<f64> = idx.iter().map(|&i| fitted.fit.arm(data.t()[i]).unit(position[i]).sample(&mut rng)).collect();
        let resampled = data.resampled(&idx, y)?;
        match model.refit(&resampled, seed, &fitted.warm) {
            Ok(f) => return Ok(f.fit),
            Err(e @ (Error::DegenerateFit { .. } | Error::EmptyStratum(_) | Error::Optimizer(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::EmptyStratum("bootstrap resample left an arm empty".into())))
}
