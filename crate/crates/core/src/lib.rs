//! Simulation and analysis of power-of-d load balancing driven by
//! non-backtracking random walks on regular graphs.
//!
//! * [`graph`]: k-regular graphs (cycle, torus, LPS Ramanujan, random
//!   regular), girth, spectral gap, edge-list files.
//! * [`walker`]: non-backtracking walkers and exact walk distributions.
//! * [`policy`]: dispatch rules.
//! * [`engine`]: uniformized queueing simulation and tail statistics.
//! * [`fluid`]: the mean-field ODE, its fixed point, and path distances.

pub mod cli;
pub mod config;
pub mod csv;
pub mod engine;
pub mod error;
pub mod fluid;
pub mod graph;
pub mod policy;
pub mod walker;

pub use config::{ExperimentConfig, GraphSpec};
pub use engine::{InitialCondition, QueueSystem, TailTrajectory, TailVector};
pub use error::{Error, Result};
pub use graph::Graph;
pub use policy::PolicyKind;
