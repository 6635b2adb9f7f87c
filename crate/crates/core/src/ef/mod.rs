//! Exponential-family distributions, finite mixtures, and closed-form tilts.
//!
//! Reweighting a density by `exp(tv . s(y))` keeps an exponential family in
//! the family: the natural parameter moves by `tv` and the normalizer is the
//! ratio of partition functions. For a mixture, each component tilts
//! independently and the weights pick up the component normalizers.

mod family;
mod mixture;
pub mod oracle;

pub use family::{Family, TiltVector, UnivariateEF};
pub use mixture::{normal_mixture_cdf, MixtureDist, Support};

use crate::error::Result;

pub fn tilt(dist: &UnivariateEF, tv: &TiltVector) -> Result<UnivariateEF> {
    dist.tilt(tv)
}

pub fn tilt_mixture(mix: &MixtureDist, tv: &TiltVector) -> Result<MixtureDist> {
    mix.tilt(tv)
}
