//! Default contagion on configuration-model financial networks with a regulator
//! that may inject equity into banks one loss away from default.
//!
//! The crate is organised bottom-up:
//!
//! - [`distribution`]: joint (in-degree, out-degree, initial equity) laws and their
//!   finite-`n` realisations.
//! - [`network`]: node populations and uniform half-link matching.
//! - [`contagion`]: the embedded discrete-time contagion chain under an
//!   [`contagion::InterventionPolicy`], plus an exhaustive small-instance oracle.
//! - [`asymptotics`]: the deterministic large-network limit (closed-form state
//!   trajectories, the `I`/`J` functions and their intervention counterparts).
//! - [`optimizer`]: the finite optimisation problem for the optimal threshold policy.
//! - [`experiments`]: batch Monte Carlo studies, dispersion fits and reports.

pub mod asymptotics;
pub mod binomial;
pub mod contagion;
pub mod distribution;
mod error;
pub mod experiments;
pub mod network;
pub mod optimizer;
pub mod rng;

pub use error::{Error, Result};
