//! Seeded data-generating processes for demos and tests.
//!
//! Every generator is a pure function of `(dgp, n, seed)` and returns the
//! observed [`Dataset`] together with the hidden [`Truth`].

mod binary_normal;
mod latent_class;
mod latent_confounder;
mod misfit;
mod zero_inflated;

pub use binary_normal::{binned_arm_means, gen_binary_normal_confounder, turning_points, BinaryNormalDgp};
pub use latent_class::{gen_latent_class, LatentClassDgp};
pub use latent_confounder::{gen_latent_confounder, LatentConfounderDgp};
pub use misfit::{misfit_demo, MisfitReport, RESTARTS};
pub use zero_inflated::{gen_zero_inflated, ZeroInflatedDgp};

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observed::Dataset;

/// Hidden quantities: the latent variable and both potential outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub u: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

impl Truth {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    /// Sample potential outcomes of arm `t`.
    pub fn outcomes(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.y0
        } else {
            &self.y1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: Dataset,
    pub truth: Truth,
}

/// Named generators with their default parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpName {
    Example1,
    LatentClass,
    ZeroInflated,
    BinaryNormal,
}

impl FromStr for DgpName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(DgpName::Example1),
            "latent-class" => Ok(DgpName::LatentClass),
            "zero-inflated" => Ok(DgpName::ZeroInflated),
            "binary-normal" => Ok(DgpName::BinaryNormal),
            _ => Err(Error::invalid(format!(
                "unknown dgp '{s}' (expected example1, latent-class, zero-inflated or binary-normal)"
            ))),
        }
    }
}

pub fn simulate(dgp: DgpName, n: usize, seed: u64) -> Result<Simulated> {
    match dgp {
        DgpName::Example1 => gen_latent_confounder(&LatentConfounderDgp::default(), n, seed),
        DgpName::LatentClass => gen_latent_class(&LatentClassDgp::default(), n, seed),
        DgpName::ZeroInflated => gen_zero_inflated(&ZeroInflatedDgp::default(), n, seed),
        DgpName::BinaryNormal => gen_binary_normal_confounder(&BinaryNormalDgp::default(), n, seed),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 units, got {n}")));
    }
    Ok(())
}
