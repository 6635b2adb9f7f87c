//! Sensitivity analysis for unobserved confounding.
//!
//! Observed-outcome models are fit once. Missing potential-outcome
//! distributions are then produced in closed form by exponentially tilting
//! the observed ones under a chosen selection function, and contrasted into
//! treatment-effect estimands over grids of sensitivity parameters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod copula;
pub mod ef;
pub mod error;
pub mod estimands;
pub mod observed;
pub mod rng;
pub mod selection;
pub mod simgen;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
