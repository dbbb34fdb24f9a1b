//! Reverse tracing. A reverse token starts at the destination of every used
//! coupon and walks the predecessor entries back to the coupon's source,
//! counting a visit at each node it occupies except the source itself.

use crate::graph::{Graph, NodeId};
use crate::run::{AlgoError, RunOptions};
use crate::sim::{
    self, counter_bits, id_bits, Context, Envelope, NodeProgram, RoundMetrics, RunStatus, SimError,
};

use super::table::{CouponId, ShortWalkTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReverseMsg {
    pub coupon: CouponId,
    /// Hops between the coupon's source and the receiving node.
    pub step: u32,
}

#[derive(Debug, Default)]
pub struct Phase3Node {
    pending: Vec<(CouponId, u32)>,
    zeta: u64,
}

struct Phase3Program<'a> {
    table: &'a ShortWalkTable,
    bits: u64,
}

impl NodeProgram for Phase3Program<'_> {
    type State = Phase3Node;
    type Message = ReverseMsg;

    fn init(&self, _node: NodeId, _graph: &Graph) -> Phase3Node {
        Phase3Node::default()
    }

    fn on_round(
        &self,
        state: &mut Phase3Node,
        inbox: &[Envelope<ReverseMsg>],
        ctx: &mut Context<'_, ReverseMsg>,
    ) -> Result<(), SimError> {
        let node = ctx.node();
        state
            .pending
            .extend(inbox.iter().map(|e| (e.payload.coupon, e.payload.step)));
        for (coupon, step) in std::mem::take(&mut state.pending) {
            if step == 0 {
                if coupon.source as NodeId != node {
                    return Err(ctx.fail(format!(
                        "reverse trace of {coupon:?} ended away from its source"
                    )));
                }
                continue;
            }
            state.zeta += 1;
            let pred = self.table.traces[node]
                .predecessor(coupon, step)
                .ok_or_else(|| {
                    ctx.fail(format!("missing trace entry for {coupon:?} step {step}"))
                })?;
            let msg = ReverseMsg {
                coupon,
                step: step - 1,
            };
            if ctx.graph().is_directed() {
                ctx.send_direct(pred, self.bits, msg)?;
            } else {
                ctx.send_edge(pred, self.bits, msg)?;
            }
        }
        Ok(())
    }

    fn is_quiescent(&self, state: &Phase3Node) -> bool {
        state.pending.is_empty()
    }
}

#[derive(Debug)]
pub struct Phase3Outcome {
    /// Segment visits per node, sources excluded.
    pub zeta: Vec<u64>,
    pub metrics: RoundMetrics,
}

/// Traces every coupon in `landed` (indexed by destination) back to its
/// source. Directed graphs send reverse hops over the direct channel.
pub fn phase3(
    graph: &Graph,
    table: &ShortWalkTable,
    landed: &[Vec<(CouponId, u32)>],
    seed: u64,
    options: &RunOptions,
) -> Result<Phase3Outcome, AlgoError> {
    let n = graph.node_count();
    if landed.len() != n || table.traces.len() != n {
        return Err(AlgoError::InvalidParams(
            "landed coupons do not match the graph".into(),
        ));
    }
    let most = table.created.iter().map(Vec::len).max().unwrap_or(0) as u64;
    let program = Phase3Program {
        table,
        bits: id_bits(n).max(1)
            + counter_bits(most.saturating_sub(1))
            + counter_bits(table.lambda as u64),
    };
    let states = landed
        .iter()
        .map(|l| Phase3Node {
            pending: l.clone(),
            zeta: 0,
        })
        .collect();
    let config = options.sim_config(seed, table.lambda as u64 + 10);
    let outcome = sim::run_from(graph, &program, states, &config)?;
    if outcome.status == RunStatus::RoundLimit {
        return Err(AlgoError::RoundLimit {
            phase: "reverse tracing",
            rounds: config.max_rounds,
        });
    }
    Ok(Phase3Outcome {
        zeta: outcome.states.iter().map(|s| s.zeta).collect(),
        metrics: outcome.metrics,
    })
}
