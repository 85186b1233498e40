//! Persistent coverage of a graph by battery-limited UAVs that recharge at a
//! single station.
//!
//! The pipeline: build a candidate pool of closed tours ([`tours`],
//! [`lollipop`]), pick a minimum cover ([`setcover`]), replicate the chosen
//! tours into a timed schedule and verify it by simulation ([`scheduler`]).

pub mod graph;
pub mod instance;
pub mod lollipop;
pub mod presets;
pub mod scheduler;
pub mod setcover;
pub mod solve;
pub mod tours;
pub mod tsp;

pub use graph::{Graph, InstanceParams, NodeId};
