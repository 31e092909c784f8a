//! Likelihood energies with explicit control of the volumetric bias.
//!
//! Standard maximum-likelihood data terms prefer segments of equal size. This
//! crate evaluates the standard, volume-weighted and entropy-corrected data
//! terms exactly, approximates the entropy by sums of "triangle" cardinality
//! terms, and minimizes the resulting energies with s/t min-cut (binary
//! problems) and α-expansion (multi-label problems).
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod energy;
pub mod entropy_approx;
mod error;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod maxflow;
pub mod model;
pub mod optimize;

pub use error::{Error, Result};
