//! Approximate equilibria of large games under joint differential privacy.
//!
//! The crate provides congestion and general game models ([`games`]),
//! binary-mechanism continual counters ([`counters`]), private best-response
//! dynamics for congestion games ([`pbr`]), Laplace-perturbed no-regret
//! dynamics ([`noregret`]), equilibrium verifiers ([`equilibria`]), the
//! mediated-game incentive harness ([`mediator`]), privacy audits
//! ([`audit`]) and a sweep runner with tabular output ([`experiment`]).

pub mod audit;
pub mod counters;
pub mod equilibria;
pub mod error;
pub mod experiment;
pub mod games;
pub mod mediator;
pub mod noregret;
pub mod pbr;
pub mod rng;

pub use error::{Error, Result};
