//! Deterministic round-synchronous simulation of Monte Carlo distributed
//! PageRank.
//!
//! The crate provides a network model ([`graph`]), a synchronous message
//! passing engine with bit accounting ([`sim`]), the PageRank walk kernel
//! ([`walk`]), three distributed estimators ([`simple`], [`stitch`],
//! [`directed`]) and centralized ground truth ([`oracle`]).

pub mod directed;
pub mod graph;
pub mod oracle;
pub mod run;
pub mod sim;
pub mod simple;
pub mod stitch;
pub mod walk;

pub use graph::{Graph, GraphError, NodeId};
pub use run::{AlgoError, RunOptions};
pub use walk::{ScoreVector, WalkParams};
