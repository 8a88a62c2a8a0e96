//! Simulation and statistics for visit counts to shrinking balls in chaotic
//! maps: a doubling baseline, an intermittent interval map, an intermittent
//! solenoid and the stadium billiard.
//!
//! The crate measures empirical visit-count distributions against the Poisson
//! law, estimates recurrence rates and local dimensions, checks Kac's bound
//! and corona (annulus) measure conditions, and evaluates the explicit
//! total-variation error bound for the Poisson approximation of stationary
//! 0/1 processes.

pub mod dynamics;
mod ensemble;
pub mod error;
pub mod hitstats;
mod orbit;
pub mod poisson;
pub mod radius_select;
pub mod rng;
pub mod systems;

pub use dynamics::{
    default_burn_in, distance, iterate, sample_invariant, PhasePoint, SystemSpec, DEFAULT_BURN_IN,
};
pub use error::{Error, Result};
pub use rng::RngStream;
