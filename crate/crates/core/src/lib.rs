//! Approximation algorithms for min sum set cover and its generalizations:
//! the time-indexed covering LP with knapsack-cover cuts, kernel transforms,
//! α-point rounding, greedy with a dual-fitting certificate, tail bounds for
//! Bernoulli sums, and exact oracles for checking all of it.

// `!(x >= lo)` is the NaN-rejecting form used throughout for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod greedy;
pub mod instances;
pub mod kernels;
pub mod lp;
pub mod oracles;
pub mod rounding;
pub mod stats;
pub mod tail_bounds;
pub mod verify;

pub use error::{Error, Result};
