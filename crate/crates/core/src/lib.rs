//! Partition functions over optimal Hamming medians of binary-string multisets,
//! the clause-gadget reduction from #D3SAT, small parsimony on binary trees and
//! a Metropolis sampler over median sets.

pub mod cnf;
pub mod error;
pub mod gadget;
pub mod mcmc;
pub mod median;
pub mod partition;
pub mod pipeline;
pub mod primes;
pub mod scalar;
pub mod strings;
pub mod trees;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use strings::{BitString, Layout, StringBlueprint, StringMultiset};

/// Exact nonnegative counts (partition sums under integer weights).
pub type Count = num_bigint::BigUint;
/// Exact rationals, used for thresholds, stationary vectors and non-integer weights.
pub type Exact = num_rational::BigRational;
/// Fast approximate evaluation.
pub type Approx = f64;
