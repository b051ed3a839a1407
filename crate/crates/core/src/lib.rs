//! Escape rates, localized escape rates and return-clustering statistics for
//! open dynamical systems with shrinking holes.
//!
//! The crate works over finite-alphabet stationary Markov measures. Holes are
//! unions of cylinders; survival probabilities are computed exactly by a
//! pattern-avoidance automaton, and by seeded Monte Carlo for continuous
//! realizations (interval maps, the cat map).
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. IO, file formats and the command-line runner live in the `erl`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod automaton;
pub mod catmap;
pub mod cluster;
pub mod cylinder;
pub mod error;
pub mod escape;
pub mod geometry;
pub mod markov;
pub mod math;
pub mod montecarlo;
pub mod systems;
pub mod tower;

pub use cluster::EiProfile;
pub use cylinder::{CylinderUnion, GoodnessReport, NeighborhoodSystem};
pub use error::{Error, Result};
pub use escape::{LocalizedRateTable, RateEstimate, SurvivalCurve};
pub use markov::{MarkovMeasure, PathSampler, Word};
pub use tower::Tower;
