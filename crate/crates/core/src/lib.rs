//! Catchment inference for policy-based inter-domain routing.
//!
//! Given an AS-level topology with routing policies and a destination
//! reachable through several ingress points, the crate computes which
//! networks route through which ingress: with certainty where the policies
//! allow it, as probabilities otherwise, refined by measurements, and it
//! plans which networks to measure.

pub mod error;
pub mod fixtures;
pub mod inference;
pub mod oracles;
pub mod planner;
pub mod rgraph;
pub mod scenario;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
