//! Large deviations of infinite weighted sums of stretched-exponential
//! random variables.
//!
//! The crate fixes the exact law `P(X > t) = exp(-kappa * t^r)` with
//! `0 < r < 1` and studies `P(sum_i a_i(n) X_i > x)` as `a_max(n) -> 0`:
//!
//! * [`dist`]: sampling, tail, moments and tail envelope of the law.
//! * [`weights`]: weight arrays (Cramer, remainder, moving average, explicit)
//!   with truncation certificates.
//! * [`theory`]: the rate function, exact sup-probabilities, and finite-n
//!   certified lower and upper bounds on the sum probability.
//! * [`mc`]: naive and conditional largest-jump Monte Carlo estimators on
//!   deterministic parallel streams.
//! * [`harness`]: experiment configuration, study runner, CSV and SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dist;
pub mod error;
pub mod harness;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod special;
pub mod theory;
pub mod weights;

pub use dist::{StretchedExpParams, TailEnvelope};
pub use error::{Error, Result};
pub use mc::RareEventEstimate;
pub use theory::{BoundConfig, BoundReport};
pub use weights::{WeightFamily, WeightVector};
