//! Join-or-balk queueing game for secondary users (SUs) of a licensed
//! channel whose primary users (PUs) preempt the base station and dismiss
//! every waiting SU.
//!
//! - [`analytic`]: closed-form stationary law, equilibrium and socially
//!   optimal joining probabilities, and the aligning admission fee.
//! - [`oracle`]: truncated-CTMC solve and search-based equilibria used to
//!   cross-check the closed forms.
//! - [`sim`]: seeded discrete-event simulation of the physical process.

pub mod analytic;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    validate, EquilibriumResult, JoiningStrategy, Regime, StationaryDistribution, SystemParams,
};
pub use par::Execution;
