//! Observed-data outcome models: built-in fitters, external fit files and
//! bootstrap replication.

mod bootstrap;
mod dataset;
pub mod em;
mod fit;
mod gated;
pub mod json;
mod large_k;
mod linear;
mod model;
mod two_part;

pub use bootstrap::bootstrap_draws;
pub use dataset::Dataset;
pub use em::{em_fit, em_fit_traced, em_refit};
pub use fit::{ArmFit, ObservedFit};
pub use gated::{fit_gated, refit_gated, GatedFit};
pub use large_k::{fit_large_k, PRUNE};
pub use linear::{fit_linear, LinearFit};
pub use model::{Fitted, Model, WarmStart};
pub use two_part::{fit_two_part, TwoPartConfig, TwoPartFit};

use crate::error::Result;
use std::path::Path;

/// Reads and validates an external fit file.
pub fn ingest_external_fit(path: impl AsRef<Path>) -> Result<ObservedFit> {
    json::read_path(path)
}
