//! Quadrature reference for tilts. Used by tests and diagnostics to check
//! the closed-form normalizers and reweighted mixtures.

use super::family::{Family, TiltVector};
use super::mixture::MixtureDist;
use crate::error::{Error, Result};

pub const MIN_NODES: usize = 4096;
const TAIL_TOL: f64 = 1e-9;
const GRID_SDS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("grid bounds [{lo}, {hi}] are empty")));
        }
        if nodes < MIN_NODES {
            return Err(Error::invalid(format!("grid needs at least {MIN_NODES} nodes, got {nodes}")));
        }
        Ok(Self { lo, hi, nodes })
    }

    /// ±12 component standard deviations around every component mean of
    /// `mix` and of its tilt by `tv`, with 8193 nodes.
    pub fn covering(mix: &MixtureDist, tv: &TiltVector) -> Result<Self> {
        if mix.family() != Family::Normal {
            return Err(Error::invalid("grid covering is defined for Normal mixtures"));
        }
        let tilted = mix.tilt(tv)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in mix.components().iter().chain(tilted.components()) {
            lo = lo.min(c.mean() - GRID_SDS * c.sd());
            hi = hi.max(c.mean() + GRID_SDS * c.sd());
        }
        Self::new(lo, hi, 8193)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes).map(|i| self.lo + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTilt {
    pub density: TabulatedDensity,
    pub normalizer: f64,
}

pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Tabulates `exp(tv . s(y)) f(y) / C` on `grid`, with `C` from the
/// trapezoid rule.
pub fn numeric_tilt_oracle<F: Fn(f64) -> f64>(density: F, tv: &TiltVector, grid: &GridSpec) -> Result<OracleTilt> {
    let ys = grid.points();
    let base: Vec<f64> = ys.iter().map(|&y| density(y)).collect();
    let mass = trapezoid(&base, grid.step());
    let tail_mass = (1.0 - mass).abs();
    if tail_mass > TAIL_TOL {
        return Err(Error::GridTooNarrow { tail_mass });
    }
    let tilted: Vec<f64> = ys.iter().zip(&base).map(|(&y, f)| (tv.dot_stat(y)).exp() * f).collect();
    let normalizer = trapezoid(&tilted, grid.step());
    let f = tilted.into_iter().map(|v| v / normalizer).collect();
    Ok(OracleTilt { density: TabulatedDensity { y: ys, f }, normalizer })
}

/// Discrete analogue: `points` is `(y, mass)` pairs.
pub fn discrete_tilt_oracle(points: &[(f64, f64)], tv: &TiltVector) -> (Vec<(f64, f64)>, f64) {
    let raw: Vec<(f64, f64)> = points.iter().map(|&(y, p)| (y, p * tv.dot_stat(y).exp())).collect();
    let c: f64 = raw.iter().map(|(_, v)| v).sum();
    (raw.into_iter().map(|(y, v)| (y, v / c)).collect(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef::UnivariateEF;

    #[test]
    fn zero_tilt_normalizer_is_one() {
        let mix = MixtureDist::single(UnivariateEF::normal(0.3, 2.0).unwrap());
        let grid = GridSpec::covering(&mix, &TiltVector::ZERO).unwrap();
        let o = numeric_tilt_oracle(|y| mix.density(y), &TiltVector::ZERO, &grid).unwrap();
        assert!((o.normalizer - 1.0).abs() < 1e-10);
    }

    #[test]
    fn narrow_grid_rejected() {
        let mix = MixtureDist::single(UnivariateEF::normal(0.0, 1.0).unwrap());
        let grid = GridSpec::new(-3.0, 3.0, 5000).unwrap();
        let err = numeric_tilt_oracle(|y| mix.density(y), &TiltVector::linear(0.1), &grid).unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(GridSpec::new(-1.0, 1.0, 100).is_err());
    }

    #[test]
    fn bernoulli_two_point_sum() {
        let (tilted, c) = discrete_tilt_oracle(&[(0.0, 0.7), (1.0, 0.3)], &TiltVector::linear(2f64.ln()));
        assert!((c - 1.3).abs() < 1e-15);
        assert!((tilted[1].1 - 6.0 / 13.0).abs() < 1e-15);
    }
}
