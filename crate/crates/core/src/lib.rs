//! Sampling from reward-tilted distributions through a noised-score oracle.
//!
//! The library is organized around one access model: a base distribution `p`
//! on `R^d` with bounded support is visible only through queries of the
//! noised score `∇ log p_σ(x)`, where `p_σ` is the law of
//! `√(1−σ²)·X + σ·Z` for `X ~ p` and standard Gaussian `Z`. On top of that
//! oracle the crate provides:
//!
//! - [`sampler`]: a seeded reverse-SDE sampler with terminal projection onto
//!   the support ball ([`sampler::unadjusted_sample`]).
//! - [`linear_tilt`]: exact score transport for linear reward tilts
//!   `p(x;v) ∝ p(x)·e^{⟨x,v⟩}` and a sampler built from it.
//! - [`normalization`]: a telescoping Monte Carlo estimator of
//!   `log E_p[e^{⟨x,v⟩}]`.
//! - [`psd_tilt`]: an auxiliary-variable sampler for PSD quadratic rewards
//!   `r(x) = ½‖Lx‖²`, which lifts the target to a mixture of linear tilts
//!   over a discretized Gaussian auxiliary variable.
//! - [`base`]: finite-atom and Gaussian-mixture bases with closed-form
//!   noised scores, exact tilts, and exact log partition functions; these
//!   are the ground truth for every test in the crate.
//! - [`metrics`]: exact total variation and Wasserstein-2 on discrete
//!   supports, empirical W2 between sample sets, and the sign-rounding mass
//!   bound used by the hardness demos.
//! - [`hardness`]: executable instance builders for the balanced-partition
//!   and max-cut reductions, and a two-block Gibbs chain that exhibits
//!   metastability under strong symmetric tilts.
//!
//! Everything is deterministic given a `u64` seed; independent draws use
//! seeds derived with [`rng::derive_seed`].

pub mod base;
pub mod error;
pub mod hardness;
pub mod linalg;
pub mod linear_tilt;
pub mod math;
pub mod metrics;
pub mod normalization;
pub mod psd_tilt;
pub mod rng;
pub mod sampler;

pub use base::{
    Atom, FiniteAtomBase, GaussianComponent, GaussianMixtureBase, NoiseLevel, ScoreOracle,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use linear_tilt::{sample_linear_tilt, sample_linear_tilt_with, LinearTiltSpec, TiltedScore};
pub use metrics::{DiscreteDistribution, SampleSet};
pub use normalization::{
    estimate_normalization, estimate_normalization_with, NormalizationEstimate,
    NormalizationParams,
};
pub use psd_tilt::{psd_tilt_sample, GridSpec, PsdParams, PsdTiltSampler, PsdTiltSpec};
pub use sampler::{default_schedule, unadjusted_sample, DiffusionSchedule, ScheduleParams};
