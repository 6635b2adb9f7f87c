use super::dataset::Dataset;
use super::large_k::fit_large_k;
use crate::ef::{MixtureDist, Support};
use crate::error::{Error, Result};
use crate::selection::Arm;

/// Per arm: unemployment mass at zero plus a mixture for log income of the
/// employed.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPartFit {
    pub arms: [MixtureDist; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPartConfig {
    pub k_max: usize,
    pub concentration: f64,
    pub seed: u64,
}

impl Default for TwoPartConfig {
    fn default() -> Self {
        Self { k_max: 10, concentration: 1.0, seed: 0 }
    }
}

pub fn fit_two_part(data: &Dataset, cfg: &TwoPartConfig) -> Result<TwoPartFit> {
    let employed = data.employment();
    let mut arms = Vec::with_capacity(2);
    for arm in Arm::BOTH {
        let idx = data.arm_indices(arm);
        if idx.is_empty() {
            return Err(Error::EmptyStratum(format!("arm {} has no units", arm.index())));
        }
        let log_y: Vec<f64> = idx.iter().filter(|&&i| employed[i]).map(|&i| data.y()[i].ln()).collect();
        if log_y.is_empty() {
            return Err(Error::EmptyStratum(format!("arm {} has no employed units", arm.index())));
        }
        let atom = (idx.len() - log_y.len()) as f64 / idx.len() as f64;
        let cont = fit_large_k(&log_y, cfg.k_max, cfg.concentration, cfg.seed.wrapping_add(arm.index() as u64))?;
        arms.push(MixtureDist::with_zero_atom(
            cont.components().to_vec(),
            cont.continuous_weights(),
            atom,
            Support::Log,
        )?);
    }
    let treated = arms.pop().expect("two arms");
    let control = arms.pop().expect("two arms");
    Ok(TwoPartFit { arms: [control, treated] })
}
