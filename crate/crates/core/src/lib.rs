//! Abstention-based robust nearest-neighbor classification under the
//! random feature-subspace threat model.
//!
//! The adversary perturbs a test feature vector by an arbitrary amount, but
//! only inside a random low-dimensional linear subspace of the feature space.
//! A thresholded nearest-neighbor classifier that may answer "don't know"
//! can defeat such an adversary when classes are well separated; this crate
//! implements that classifier, exact and approximate attack oracles against
//! it, Monte Carlo robustness evaluation, data-driven threshold tuning via a
//! continuous exponential forecaster, and calculators plus verification
//! harnesses for the closed-form error/abstention bounds of the model.
//!
//! Modules map onto the moving parts:
//!
//! - [`geometry`]: subspace sampling (Haar and κ-bounded), projections,
//!   sphere-cap measures and special functions.
//! - [`data`]: datasets, CSV I/O, synthetic generators, nearest-neighbor scan.
//! - [`classifier`]: the abstaining classifier, σ-preprocessing, the
//!   point-specific-threshold variant, and a ridge one-vs-rest baseline.
//! - [`attack`]: exact/approximate subspace attacks, critical thresholds,
//!   line attacks, the exact linear-model attack, and a brute-force oracle.
//! - [`metrics`]: natural error, abstention rate, Monte Carlo robust error,
//!   and exact piecewise-constant curves of all three versus τ.
//! - [`tuner`]: the continuous exponential forecaster over τ, regret
//!   accounting, online-to-batch conversion, and (τ, σ) grid search.
//! - [`bounds`]: closed-form bound calculators and their MC verification.
//!
//! All randomness flows from explicit 64-bit seeds through a splittable
//! stream derivation ([`rng`]), so parallel Monte Carlo runs reproduce
//! bit-identically regardless of worker count.

pub mod attack;
pub mod bounds;
pub mod classifier;
pub mod data;
mod error;
pub mod geometry;
pub(crate) mod linalg;
pub mod metrics;
pub mod piecewise;
pub mod rng;
pub mod tuner;

pub use error::{Error, Result};
