//! Seismic two-terminal reliability of transportation networks.
//!
//! Monte Carlo estimation of source–terminal connectivity under earthquake
//! damage, with neural surrogates that replace the per-realization
//! connectivity check or the whole sampling loop.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fragility;
pub mod hazard;
pub mod montecarlo;
pub mod network;
pub mod neural;
pub mod rng;
pub mod scenario;
pub mod surrogates;

pub use error::{Error, Result};
pub use montecarlo::{
    estimate_connectivity, estimate_probabilistic_event, ConnectivityCheck, DfsCheck, McOptions,
};
pub use network::{TopologyRealization, TransportNetwork};
pub use scenario::Scenario;
