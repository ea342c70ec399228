//! Extremum seeking gradient tracking: every agent of a network minimizes the
//! sum of private costs it can only evaluate, never differentiate, by mixing
//! sinusoidal dither probes with a gradient-tracking consensus scheme.

pub mod algorithm;
pub mod bench;
pub mod diagnostics;
pub mod dither;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod numerics;
pub mod problem;
pub mod rng;

pub use algorithm::{
    AgentState, AlgorithmKind, AlgorithmParams, Execution, OutboundMessage, Simulation,
};
pub use diagnostics::{ConsensusBasis, Reference, RoundMetrics, RunRecord, CSV_HEADER};
pub use dither::{design_dither, recipe_periods, DitherConfig};
pub use error::{Error, Result};
pub use estimator::{es_gradient, GradientEstimate};
pub use graph::{erdos_renyi_connected, metropolis_weights, WeightedGraph};
pub use problem::{InstanceSpec, LocalCost, Problem};
