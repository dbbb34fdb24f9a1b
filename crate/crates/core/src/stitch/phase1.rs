//! Short-walk generation. Every coupon takes up to `lambda` hops, one per
//! round, each hop recorded at the node it arrives at. At round `lambda + 1`
//! destinations report each landed coupon to its source over the direct
//! channel; the phase is a fixed `lambda + 2` round schedule.

use crate::graph::{Graph, NodeId};
use crate::run::{AlgoError, RunOptions};
use crate::sim::{
    self, counter_bits, id_bits, Context, Envelope, NodeProgram, RoundMetrics, SimError,
};
use crate::walk::{self, Step};

use super::table::{
    CouponId, CouponStatus, ShortWalkCoupon, ShortWalkTable, TraceEntry, TraceStore,
};

/// How many short walks each node creates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouponBudget {
    /// `d(v) * eta` coupons at node v, with d the out-degree.
    PerDegree(u64),
    /// The same count at every node.
    PerNode(u64),
}

impl CouponBudget {
    pub fn coupons_at(&self, graph: &Graph, v: NodeId) -> u64 {
        match *self {
            CouponBudget::PerDegree(eta) => graph.out_degree(v) as u64 * eta,
            CouponBudget::PerNode(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase1Msg {
    Forward {
        coupon: CouponId,
        hops: u32,
    },
    /// Sent by the destination to the coupon's source.
    Landed {
        seq: u32,
        hops: u32,
        reset: bool,
    },
}

#[derive(Debug, Default)]
pub struct Phase1Node {
    created: Vec<ShortWalkCoupon>,
    holding: Vec<(CouponId, u32)>,
    callbacks: Vec<(CouponId, u32, bool)>,
    traces: Vec<TraceEntry>,
    clock: u64,
}

struct Phase1Program {
    lambda: u32,
    epsilon: f64,
    budget: CouponBudget,
    forward_bits: u64,
    landed_bits: u64,
}

impl Phase1Program {
    fn land(&self, state: &mut Phase1Node, node: NodeId, coupon: CouponId, hops: u32, reset: bool) {
        if coupon.source as NodeId == node {
            record_landing(&mut state.created[coupon.seq as usize], node, hops, reset);
        } else {
            state.callbacks.push((coupon, hops, reset));
        }
    }
}

fn record_landing(coupon: &mut ShortWalkCoupon, destination: NodeId, hops: u32, reset: bool) {
    coupon.hops_taken = hops;
    coupon.destination = Some(destination);
    coupon.status = if reset {
        CouponStatus::LandedReset
    } else {
        CouponStatus::LandedFull
    };
}

impl NodeProgram for Phase1Program {
    type State = Phase1Node;
    type Message = Phase1Msg;

    fn init(&self, node: NodeId, graph: &Graph) -> Phase1Node {
        let count = self.budget.coupons_at(graph, node) as u32;
        let created: Vec<ShortWalkCoupon> = (0..count)
            .map(|seq| {
                ShortWalkCoupon::new(
                    CouponId {
                        source: node as u32,
                        seq,
                    },
                    self.lambda,
                )
            })
            .collect();
        let holding = created.iter().map(|c| (c.id, 0)).collect();
        Phase1Node {
            created,
            holding,
            ..Phase1Node::default()
        }
    }

    fn on_round(
        &self,
        state: &mut Phase1Node,
        inbox: &[Envelope<Phase1Msg>],
        ctx: &mut Context<'_, Phase1Msg>,
    ) -> Result<(), SimError> {
        state.clock = ctx.round();
        let node = ctx.node();
        for envelope in inbox {
            match envelope.payload {
                Phase1Msg::Forward { coupon, hops } => {
                    state.traces.push(TraceEntry {
                        coupon,
                        step: hops,
                        pred: envelope.src,
                    });
                    state.holding.push((coupon, hops));
                }
                Phase1Msg::Landed { seq, hops, reset } => {
                    let coupon = state
                        .created
                        .get_mut(seq as usize)
                        .ok_or_else(|| ctx.fail(format!("callback for unknown coupon {seq}")))?;
                    record_landing(coupon, envelope.src, hops, reset);
                }
            }
        }

        for (coupon, hops) in std::mem::take(&mut state.holding) {
            if hops == self.lambda {
                self.land(state, node, coupon, hops, false);
                continue;
            }
            let neighbors = ctx.out_neighbors();
            let step = walk::step(ctx.rng(), self.epsilon, neighbors);
            match step.map_err(|e| ctx.fail(e.to_string()))? {
                Step::Terminate => self.land(state, node, coupon, hops, true),
                Step::MoveTo(next) => {
                    ctx.send_edge(
                        next,
                        self.forward_bits,
                        Phase1Msg::Forward {
                            coupon,
                            hops: hops + 1,
                        },
                    )?;
                }
            }
        }

        if ctx.round() == self.lambda as u64 + 1 {
            for (coupon, hops, reset) in std::mem::take(&mut state.callbacks) {
                ctx.send_direct(
                    coupon.source as NodeId,
                    self.landed_bits,
                    Phase1Msg::Landed {
                        seq: coupon.seq,
                        hops,
                        reset,
                    },
                )?;
            }
        }
        Ok(())
    }

    fn is_quiescent(&self, state: &Phase1Node) -> bool {
        state.clock >= self.lambda as u64 + 2
    }
}

#[derive(Debug)]
pub struct Phase1Outcome {
    pub table: ShortWalkTable,
    pub metrics: RoundMetrics,
}

/// Runs the short-walk phase with every node's coupon count set by `budget`.
pub fn phase1(
    graph: &Graph,
    lambda: u32,
    budget: CouponBudget,
    epsilon: f64,
    seed: u64,
    options: &RunOptions,
) -> Result<Phase1Outcome, AlgoError> {
    graph.ensure_valid()?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(AlgoError::InvalidParams(format!(
            "epsilon = {epsilon} is not in [0, 1]"
        )));
    }
    let n = graph.node_count();
    let most = (0..n)
        .map(|v| budget.coupons_at(graph, v))
        .max()
        .unwrap_or(0);
    if most > u32::MAX as u64 {
        return Err(AlgoError::InvalidParams(format!(
            "{most} coupons per node exceeds the id space"
        )));
    }
    if matches!(
        budget,
        CouponBudget::PerDegree(0) | CouponBudget::PerNode(0)
    ) {
        return Err(AlgoError::InvalidParams(
            "coupon budget must be at least 1".into(),
        ));
    }
    let seq_bits = counter_bits(most.saturating_sub(1));
    let hop_bits = counter_bits(lambda as u64);
    let program = Phase1Program {
        lambda,
        epsilon,
        budget,
        forward_bits: id_bits(n).max(1) + seq_bits + hop_bits,
        landed_bits: seq_bits + hop_bits + 1,
    };
    let schedule = lambda as u64 + 2;
    let config = RunOptions {
        max_rounds: None,
        ..*options
    }
    .sim_config(seed, schedule);
    let outcome = sim::run(graph, &program, &config)?;
    if outcome.status != sim::RunStatus::Quiescent {
        return Err(AlgoError::RoundLimit {
            phase: "short walks",
            rounds: schedule,
        });
    }

    let mut created = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    for state in outcome.states {
        if let Some(c) = state.created.iter().find(|c| !c.is_landed()) {
            return Err(AlgoError::Sim(SimError::Program {
                round: schedule,
                node: c.source(),
                reason: format!("coupon {} never reported a destination", c.id.seq),
            }));
        }
        created.push(state.created);
        traces.push(TraceStore::from_unsorted(state.traces));
    }
    Ok(Phase1Outcome {
        table: ShortWalkTable {
            lambda,
            created,
            traces,
        },
        metrics: outcome.metrics,
    })
}
