//! Diffusion models, realization sampling, and the continuous-time
//! multi-cascade simulator.
//!
//! A model assigns every edge an activation probability and Weibull
//! transmission-time parameters. Sampling a model yields a [`Realization`]:
//! the set of live edges together with one travel time per live edge. Once a
//! realization is fixed, diffusion is deterministic (see [`simulate`]).

mod io;
mod model;
mod realization;
mod simulate;

pub use io::{read_bank, read_model, write_bank, write_model, BankHeader};
pub use model::{
    build_true_model, perturb_model, random_model, DiffusionModel, EdgeParams, ModelDescriptor,
    PARAM_FLOOR,
};
pub use realization::{sample_bank, sample_realization, sample_with, Realization, RealizationBank};
pub(crate) use simulate::{competitive_spread, spread_from_events, SpreadScratch, NO_PARENT, UNSET};
pub use simulate::{simulate, Activation, ActivationOutcome, CascadeSeeds};
