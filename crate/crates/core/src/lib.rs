//! Nonparametric importance sampling on linear blend frequency polygons.
//!
//! The crate is organised bottom-up:
//!
//! - [`lbfp`]: weighted histograms, the LBFP density, exact inversion sampling
//!   and a text serialization of grids.
//! - [`nis`]: two-stage importance samplers that estimate the optimal
//!   proposal from a pilot sample (unnormalized NIS, the sign-split NIS+/-,
//!   and self-normalized NSIS), plus bandwidth and pilot-fraction rules.
//! - [`integrands`]: benchmark problems with analytic oracles and their
//!   parametric baselines.
//! - [`queueing`]: busy-period simulation of single and dual server queues
//!   and rare-event level-crossing estimators.
//! - [`metrics`]: seeded replication harness (MSE, relative efficiency,
//!   coefficient of variation, timings).
//! - [`cli`]: the `nis` command-line front end.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod error;
pub mod integrands;
pub mod lbfp;
pub mod metrics;
pub mod nis;
pub mod queueing;
pub mod rng;

pub use error::{Error, Result};
