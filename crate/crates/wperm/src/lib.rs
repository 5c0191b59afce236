//! Cycle statistics of weighted random permutations.
//!
//! A permutation of degree `n` is weighted by the product of `theta[len]`
//! over its cycle lengths, with lengths restricted to an admissible set;
//! the measure is normalized by the constant `h_n`. This crate computes
//! exact finite-`n` laws of cycle statistics through truncated power
//! series, evaluates the matching singularity-analysis predictions,
//! samples from the measure by two independent algorithms, and verifies
//! the limit theorems statistically.
//!
//! Module map:
//! - [`series`]: dense truncated power series over exact rationals or floats.
//! - [`model`]: weight sequences, singularity data, restriction sets.
//! - [`exact`]: normalization constants, exact laws, characteristic functions,
//!   and a brute-force oracle over integer partitions.
//! - [`asymptotics`]: evaluable leading-order predictions and the complex
//!   gamma function.
//! - [`sampler`]: sequential and conditioned-Poisson permutation samplers,
//!   plus a stick-breaking reference sampler.
//! - [`harness`]: statistical verification checks and report types.

pub mod asymptotics;
pub mod exact;
pub mod harness;
pub mod model;
pub mod sampler;
pub mod series;

/// Crate version, embedded in emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
