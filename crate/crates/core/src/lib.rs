//! Speed-profile planning for a point-mass vehicle on a sampled track.
//!
//! Given a track discretized at a uniform step, a vehicle model (mass, power
//! cap, friction limit, rolling and drag coefficients), and boundary kinetic
//! energies, this crate computes the profile minimizing a weighted sum of
//! traction energy and travel time. Two cooperating pieces do the work:
//!
//! * [`tightening`] contracts per-position kinetic-energy windows with
//!   monotone one-step reachability maps, deciding feasibility exactly and
//!   producing the envelope pair used to certify the relaxation below.
//! * [`relaxation`] assembles a second-order cone relaxation of the planning
//!   problem, solves it with the bundled interior-point solver in [`socp`],
//!   and verifies a posteriori that the relaxation is exact (the time
//!   variables match `1/sqrt(w)`), reporting the violation structure when it
//!   is not.
//!
//! [`oracle`] holds independent reference machinery (interval reachability,
//! dynamic programming on kinetic-energy grids, direct constraint checking,
//! and a seeded instance generator) used to cross-validate the main pipeline.
//!
//! The crate is `no_std`-compatible (`default-features = false`); everything
//! allocates through `alloc` and scalar math falls back to `libm`.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub(crate) mod math;
pub mod model;
pub mod oracle;
pub mod relaxation;
pub mod socp;
pub mod tightening;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
