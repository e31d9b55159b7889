//! Simulation and exact analysis of the DejaVu plurality-consensus rule.
//!
//! In each synchronous round every agent pulls opinions from uniformly random
//! agents (with replacement) until it sees some opinion for the second time
//! or has taken `h` samples; on a repeat it adopts the repeated opinion,
//! otherwise it keeps its own. The crate provides the exact one-round law,
//! agent-level and aggregate simulators, h-majority and Poisson-race
//! reference processes, a verification harness for the rule's inequalities,
//! and a seeded experiment runner.

pub mod config;
pub mod engines;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod protocol;
pub mod rng;
pub mod sampling;
pub mod verify;

pub use config::{
    bias_hypothesis, generate_initial, ConfigMetrics, DensityVector, InitialSpec,
    OpinionConfiguration,
};
pub use error::{Error, Result};
pub use protocol::{Engine, ProtocolKind, ProtocolSpec, SampleAccounting, TieRule};
pub use rng::RandomStream;

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("dejavu ", env!("CARGO_PKG_VERSION"));
