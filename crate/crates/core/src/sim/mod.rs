//! Synchronous round engine.
//!
//! Every round, each node's handler sees the envelopes sent to it in the
//! previous round and may queue new ones. Messages are never delivered in the
//! round they were sent. Inboxes are ordered by `(src, channel, sequence)`, and
//! each node draws from its own random stream, so a run is a pure function of
//! `(graph, program, config)` whether handlers execute sequentially or on a
//! thread pool.

mod metrics;

pub use metrics::{
    audit_congestion, counter_bits, header_bits, id_bits, CongestionViolation, LinkTraffic,
    MetricsSummary, RoundMetrics,
};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, NodeId};

/// Per-node random stream.
pub type NodeRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("round {round}: node {src} sent on edge channel to non-neighbor {dst}")]
    NotANeighbor {
        round: u64,
        src: NodeId,
        dst: NodeId,
    },
    #[error("round {round}: node {src} addressed unknown node {dst}")]
    UnknownNode {
        round: u64,
        src: NodeId,
        dst: NodeId,
    },
    #[error("round {round}: node {src} sent an empty payload to {dst}")]
    EmptyPayload {
        round: u64,
        src: NodeId,
        dst: NodeId,
    },
    #[error("round {round}: node {node}: {reason}")]
    Program {
        round: u64,
        node: NodeId,
        reason: String,
    },
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    /// Along a graph edge, respecting direction; subject to the congestion budget.
    Edge,
    /// Addressed by node id, outside the edge budget.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<M> {
    pub src: NodeId,
    pub dst: NodeId,
    pub channel: Channel,
    pub payload_bits: u64,
    pub payload: M,
    seq: u64,
}

impl<M> Envelope<M> {
    /// Position of this envelope among everything its sender queued that round.
    pub fn sequence(&self) -> u64 {
        self.seq
    }
}

/// An envelope together with the round it was sent in.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedEnvelope<M> {
    pub sent_round: u64,
    pub envelope: Envelope<M>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub max_rounds: u64,
    pub seed: u64,
    /// Run node handlers on the rayon pool. Results are identical either way.
    pub parallel: bool,
    /// Keep a copy of every envelope in [`RunOutcome::trace`].
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(seed: u64, max_rounds: u64) -> Self {
        Self {
            max_rounds,
            seed,
            parallel: false,
            record_trace: false,
        }
    }
}

/// What a node handler can see and do during one round.
pub struct Context<'a, M> {
    node: NodeId,
    round: u64,
    graph: &'a Graph,
    rng: &'a mut NodeRng,
    outbox: Vec<Envelope<M>>,
}

impl<'a, M> Context<'a, M> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    /// 1-based index of the executing round.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn out_neighbors(&self) -> &'a [NodeId] {
        self.graph.out_neighbors(self.node)
    }

    pub fn rng(&mut self) -> &mut NodeRng {
        self.rng
    }

    pub fn send_edge(
        &mut self,
        dst: NodeId,
        payload_bits: u64,
        payload: M,
    ) -> Result<(), SimError> {
        if !self.graph.has_edge(self.node, dst) {
            return Err(SimError::NotANeighbor {
                round: self.round,
                src: self.node,
                dst,
            });
        }
        self.push(dst, Channel::Edge, payload_bits, payload)
    }

    pub fn send_direct(
        &mut self,
        dst: NodeId,
        payload_bits: u64,
        payload: M,
    ) -> Result<(), SimError> {
        if dst >= self.graph.node_count() {
            return Err(SimError::UnknownNode {
                round: self.round,
                src: self.node,
                dst,
            });
        }
        self.push(dst, Channel::Direct, payload_bits, payload)
    }

    /// Builds a program error tagged with this node and round.
    pub fn fail(&self, reason: impl Into<String>) -> SimError {
        SimError::Program {
            round: self.round,
            node: self.node,
            reason: reason.into(),
        }
    }

    fn push(
        &mut self,
        dst: NodeId,
        channel: Channel,
        payload_bits: u64,
        payload: M,
    ) -> Result<(), SimError> {
        if payload_bits == 0 {
            return Err(SimError::EmptyPayload {
                round: self.round,
                src: self.node,
                dst,
            });
        }
        let seq = self.outbox.len() as u64;
        self.outbox.push(Envelope {
            src: self.node,
            dst,
            channel,
            payload_bits,
            payload,
            seq,
        });
        Ok(())
    }
}

/// A distributed algorithm expressed as per-node handlers.
pub trait NodeProgram: Sync {
    type State: Send;
    type Message: Clone + Send + Sync;

    fn init(&self, node: NodeId, graph: &Graph) -> Self::State;

    fn on_round(
        &self,
        state: &mut Self::State,
        inbox: &[Envelope<Self::Message>],
        ctx: &mut Context<'_, Self::Message>,
    ) -> Result<(), SimError>;

    /// True when the node holds no live work. The run ends once every node is
    /// quiescent and no envelope is in flight.
    fn is_quiescent(&self, state: &Self::State) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Quiescent,
    /// `max_rounds` elapsed first; states are partial.
    RoundLimit,
}

#[derive(Debug)]
pub struct RunOutcome<S, M> {
    pub states: Vec<S>,
    pub metrics: RoundMetrics,
    pub status: RunStatus,
    /// Empty unless [`SimConfig::record_trace`] was set.
    pub trace: Vec<TracedEnvelope<M>>,
}

/// Stream `node` of the generator keyed by `seed`.
pub fn node_rng(seed: u64, node: NodeId) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

/// Mixes a tag into a root seed (SplitMix64 finalizer), for deriving the seeds
/// of phases and repeats from one user-facing seed.
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    let mut z = root ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run<P: NodeProgram>(
    graph: &Graph,
    program: &P,
    config: &SimConfig,
) -> Result<RunOutcome<P::State, P::Message>, SimError> {
    let states = (0..graph.node_count())
        .map(|v| program.init(v, graph))
        .collect();
    run_from(graph, program, states, config)
}

/// Runs `program` from pre-built node states, e.g. states carried over from a
/// previous phase.
pub fn run_from<P: NodeProgram>(
    graph: &Graph,
    program: &P,
    mut states: Vec<P::State>,
    config: &SimConfig,
) -> Result<RunOutcome<P::State, P::Message>, SimError> {
    let n = graph.node_count();
    if config.max_rounds == 0 {
        return Err(SimError::InvalidConfig(
            "max_rounds must be at least 1".into(),
        ));
    }
    if states.len() != n {
        return Err(SimError::InvalidConfig(format!(
            "{} states for {n} nodes",
            states.len()
        )));
    }

    let mut rngs: Vec<NodeRng> = (0..n).map(|v| node_rng(config.seed, v)).collect();
    let mut inboxes: Vec<Vec<Envelope<P::Message>>> = (0..n).map(|_| Vec::new()).collect();
    let mut metrics = RoundMetrics::new(header_bits(n));
    let mut trace = Vec::new();
    let mut status = RunStatus::RoundLimit;

    for round in 1..=config.max_rounds {
        let step = |((v, state), (rng, inbox)): (
            (usize, &mut P::State),
            (&mut NodeRng, &mut Vec<Envelope<P::Message>>),
        )| {
            let mut ctx = Context {
                node: v,
                round,
                graph,
                rng,
                outbox: Vec::new(),
            };
            let delivered = std::mem::take(inbox);
            program
                .on_round(state, &delivered, &mut ctx)
                .map(|()| ctx.outbox)
        };
        let outboxes: Vec<Result<Vec<Envelope<P::Message>>, SimError>> = if config.parallel {
            states
                .par_iter_mut()
                .enumerate()
                .zip(rngs.par_iter_mut().zip(inboxes.par_iter_mut()))
                .map(step)
                .collect()
        } else {
            states
                .iter_mut()
                .enumerate()
                .zip(rngs.iter_mut().zip(inboxes.iter_mut()))
                .map(step)
                .collect()
        };

        let mut in_flight = false;
        for outbox in outboxes {
            let outbox = outbox?;
            let Some(first) = outbox.first() else {
                continue;
            };
            let src = first.src;
            let mut links: BTreeMap<(NodeId, Channel), (u64, u64)> = BTreeMap::new();
            for envelope in &outbox {
                let entry = links.entry((envelope.dst, envelope.channel)).or_default();
                entry.0 += metrics.header_bits + envelope.payload_bits;
                entry.1 += 1;
            }
            for ((dst, channel), (bits, messages)) in links {
                metrics.record(
                    round,
                    channel,
                    LinkTraffic {
                        round,
                        src,
                        dst,
                        bits,
                        messages,
                    },
                );
            }
            for envelope in outbox {
                if config.record_trace {
                    trace.push(TracedEnvelope {
                        sent_round: round,
                        envelope: envelope.clone(),
                    });
                }
                inboxes[envelope.dst].push(envelope);
                in_flight = true;
            }
        }
        for inbox in &mut inboxes {
            // Sender order and per-sender sequence are already in place.
            inbox.sort_by_key(|e| (e.src, e.channel));
        }
        metrics.rounds_elapsed = round;

        if !in_flight && states.iter().all(|s| program.is_quiescent(s)) {
            status = RunStatus::Quiescent;
            break;
        }
    }

    Ok(RunOutcome {
        states,
        metrics,
        status,
        trace,
    })
}
