//! Simulation and exact analysis of the iterated Keynesian beauty contest.
//!
//! `N` points live in `R^d`. At every step the point farthest from the
//! barycentre is discarded and a fresh random point is inserted. The `N - 1`
//! surviving points (the *core*) contract onto a random limit `ξ_N`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! algorithmic parts:
//!
//! * [`geometry`]: barycentre, barycentric order, core, diameter and the
//!   sum-of-squared-distances Lyapunov functional.
//! * [`dynamics`]: the Markov step, trajectory engine, accelerated
//!   event-skip sampling and diameter-increase search.
//! * [`estimators`]: histograms, `π_N`, Beta CDF, Kolmogorov–Smirnov fitting
//!   and empirical moments.
//! * [`exact3`]: the modified `N = 3` model, its fixed-point law `L` and the
//!   exact moment recursion.
//! * [`spacings`]: uniform spacings and the exact law of the uniform `N = 3`
//!   starting core.
//!
//! Threaded replica batches, file formats and the command line live in the
//! companion `bcl` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exact3;
pub mod geometry;
mod math;
pub mod rng;
pub mod spacings;

pub use error::{Error, Result};
pub use geometry::Configuration;
