//! Learning contagion-management decisions for one task from query-decision
//! pairs observed on another, over an uncertain diffusion model.
//!
//! The crate is organised bottom-up: [`graph`] holds the network, [`contagion`]
//! the stochastic diffusion model and its realizations, [`kernels`] the
//! per-realization objectives, [`optimize`] greedy maximization and pair
//! generation, [`learner`] the structured trainer, and [`harness`] baselines
//! and the experiment runner.

pub mod contagion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod kernels;
pub mod learner;
pub mod optimize;
pub mod rng;

pub use error::{Error, Result};
