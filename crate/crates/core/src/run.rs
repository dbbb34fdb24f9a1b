//! Options and errors shared by the distributed algorithms.

use serde::Serialize;
use thiserror::Error;

use crate::graph::GraphError;
use crate::oracle::OracleError;
use crate::sim::{MetricsSummary, RoundMetrics, SimConfig, SimError};
use crate::walk::WalkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{phase} did not finish within {rounds} rounds")]
    RoundLimit { phase: &'static str, rounds: u64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Execute node handlers on the rayon pool.
    pub parallel: bool,
    /// Keep every envelope for offline inspection.
    pub record_trace: bool,
    /// Per-phase round cap; each algorithm picks a generous default.
    pub max_rounds: Option<u64>,
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub(crate) fn sim_config(&self, seed: u64, default_max_rounds: u64) -> SimConfig {
        SimConfig {
            max_rounds: self.max_rounds.unwrap_or(default_max_rounds),
            seed,
            parallel: self.parallel,
            record_trace: self.record_trace,
        }
    }
}

/// Metrics of one engine run inside a multi-phase algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseMetrics {
    pub name: &'static str,
    pub metrics: RoundMetrics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSummary {
    pub name: &'static str,
    #[serde(flatten)]
    pub summary: MetricsSummary,
}

impl PhaseMetrics {
    pub fn summary(&self) -> PhaseSummary {
        PhaseSummary {
            name: self.name,
            summary: self.metrics.summary(),
        }
    }
}

/// Concatenates phase metrics in execution order.
pub fn merge_phases(phases: &[PhaseMetrics]) -> RoundMetrics {
    let mut total = RoundMetrics::default();
    for phase in phases {
        total.append(&phase.metrics);
    }
    total
}
