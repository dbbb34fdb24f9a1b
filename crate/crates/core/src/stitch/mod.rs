//! Short-walk stitching for undirected graphs.
//!
//! Phase 1 builds a pool of short walks of length lambda at every node,
//! phase 2 composes them into K long walks per node, and phase 3 replays each
//! used short walk backwards to count its visits. The long walks have exactly
//! the law of walks capped at ell steps, so the usual estimator applies.

mod phase1;
mod phase2;
mod phase3;
mod table;

pub use phase1::{phase1, CouponBudget, Phase1Msg, Phase1Outcome};
pub use phase2::{
    phase2, ConnectorSet, LongWalk, Phase2Msg, Phase2Outcome, Piece, WalkId, WalkToken,
};
pub use phase3::{phase3, Phase3Outcome, ReverseMsg};
pub use table::{CouponId, CouponStatus, ShortWalkCoupon, ShortWalkTable, TraceEntry, TraceStore};

use serde::Serialize;

use crate::graph::Graph;
use crate::run::{merge_phases, AlgoError, PhaseMetrics, RunOptions};
use crate::sim::{derive_seed, RoundMetrics, TracedEnvelope};
use crate::walk::{self, ScoreVector, WalkParams};

pub const PHASE_SHORT_WALKS: &str = "short-walks";
pub const PHASE_STITCH: &str = "stitch";
pub const PHASE_TAIL: &str = "tail";
pub const PHASE_REVERSE: &str = "reverse-trace";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StitchParams {
    pub walk: WalkParams,
    pub lambda: u32,
    pub budget: CouponBudget,
}

impl StitchParams {
    /// lambda = ceil(sqrt(log n)) and eta = ceil(log^3 n / epsilon), both at
    /// least 1, in the log base of `walk`.
    pub fn undirected(n: usize, walk: WalkParams) -> Self {
        let log_n = walk.log_base.log(n as f64).max(0.0);
        Self {
            walk,
            lambda: walk::ceil_count(log_n.sqrt()).max(1) as u32,
            budget: CouponBudget::PerDegree(walk::ceil_count(log_n.powi(3) / walk.epsilon).max(1)),
        }
    }

    pub fn with_lambda(mut self, lambda: u32) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eta(mut self, eta: u64) -> Self {
        self.budget = CouponBudget::PerDegree(eta);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchStats {
    pub lambda: u32,
    pub ell: u32,
    pub coupons_created: u64,
    pub coupons_used: u64,
    /// Trace entries held across all nodes after phase 1.
    pub trace_entries: u64,
    pub stitches: u64,
    pub max_stitches_per_walk: u64,
    pub exhaustions: u64,
    pub truncations: u64,
    /// max over v of zeta(v) / d(v), divided by log^3 n / epsilon.
    pub visit_bound_ratio: Option<f64>,
}

#[derive(Debug)]
pub struct StitchOutcome {
    pub scores: ScoreVector,
    /// Short walks, stitch, tail, reverse trace, in order.
    pub phases: Vec<PhaseMetrics>,
    pub metrics: RoundMetrics,
    pub table: ShortWalkTable,
    pub connectors: ConnectorSet,
    pub stats: StitchStats,
    /// Phase 2 envelopes; empty unless tracing.
    pub walk_trace: Vec<TracedEnvelope<Phase2Msg>>,
}

impl StitchOutcome {
    pub fn phase(&self, name: &str) -> Option<&RoundMetrics> {
        self.phases
            .iter()
            .find(|p| p.name == name)
            .map(|p| &p.metrics)
    }

    /// Walk steps carried by the phase 2 envelopes.
    pub fn traced_moves(&self) -> u64 {
        self.walk_trace
            .iter()
            .map(|t| t.envelope.payload.moves())
            .sum()
    }
}

pub fn run_improved(
    graph: &Graph,
    params: &StitchParams,
    options: &RunOptions,
) -> Result<StitchOutcome, AlgoError> {
    if graph.is_directed() {
        return Err(AlgoError::Unsupported(
            "stitching in CONGEST needs an undirected graph".into(),
        ));
    }
    run_phases(graph, params, options)
}

pub(crate) fn run_phases(
    graph: &Graph,
    params: &StitchParams,
    options: &RunOptions,
) -> Result<StitchOutcome, AlgoError> {
    graph.ensure_valid()?;
    params.walk.validate()?;
    if params.lambda == 0 {
        return Err(AlgoError::InvalidParams("lambda must be at least 1".into()));
    }
    let n = graph.node_count();
    let WalkParams {
        epsilon,
        walks_per_node,
        ell,
        ..
    } = params.walk;
    let seed = |tag| derive_seed(options.seed, tag);

    let p1 = phase1(
        graph,
        params.lambda,
        params.budget,
        epsilon,
        seed(1),
        options,
    )?;
    let mut table = p1.table;
    let trace_entries = table.trace_entry_count() as u64;
    let p2 = phase2(
        graph,
        &mut table,
        walks_per_node,
        epsilon,
        ell,
        (seed(2), seed(3)),
        options,
    )?;
    let p3 = phase3(graph, &table, &p2.landed, seed(4), options)?;

    let zeta: Vec<u64> = (0..n)
        .map(|v| walks_per_node + p2.zeta_steps[v] + p3.zeta[v])
        .collect();
    let phases = vec![
        PhaseMetrics {
            name: PHASE_SHORT_WALKS,
            metrics: p1.metrics,
        },
        PhaseMetrics {
            name: PHASE_STITCH,
            metrics: p2.stitch_metrics,
        },
        PhaseMetrics {
            name: PHASE_TAIL,
            metrics: p2.tail_metrics,
        },
        PhaseMetrics {
            name: PHASE_REVERSE,
            metrics: p3.metrics,
        },
    ];
    let stats = StitchStats {
        lambda: params.lambda,
        ell,
        coupons_created: table.coupon_count() as u64,
        coupons_used: table.used_count() as u64,
        trace_entries,
        stitches: p2.stitches,
        max_stitches_per_walk: p2
            .connectors
            .walks
            .iter()
            .map(|w| w.segments().count() as u64)
            .max()
            .unwrap_or(0),
        exhaustions: p2.exhaustions,
        truncations: p2.truncations,
        visit_bound_ratio: visit_bound_ratio(graph, &zeta, epsilon, params.walk.log_base),
    };
    Ok(StitchOutcome {
        scores: walk::estimate(zeta, n, walks_per_node, epsilon),
        metrics: merge_phases(&phases),
        phases,
        table,
        connectors: p2.connectors,
        stats,
        walk_trace: p2.trace,
    })
}

fn visit_bound_ratio(
    graph: &Graph,
    zeta: &[u64],
    epsilon: f64,
    base: walk::LogBase,
) -> Option<f64> {
    let scale = base.log(graph.node_count() as f64).powi(3) / epsilon;
    if scale <= 0.0 {
        return None;
    }
    let worst = zeta
        .iter()
        .enumerate()
        .map(|(v, &z)| z as f64 / graph.out_degree(v).max(1) as f64)
        .fold(0.0, f64::max);
    Some(worst / scale)
}
