//! Token stitching. A token standing at a node with completed length L takes
//! one of that node's unused coupons at random and jumps to its destination
//! over the direct channel, adding the coupon's hops to L. It keeps stitching
//! while L < ell - lambda; a coupon that ended in a reset ends the walk. The
//! remaining steps are walked hop by hop in a separate tail run. A node that
//! runs out of coupons walks the token naively for lambda hops instead.

use rand::Rng;
use serde::Serialize;

use crate::graph::{Graph, NodeId};
use crate::run::{AlgoError, RunOptions};
use crate::sim::{
    self, counter_bits, id_bits, Context, Envelope, NodeProgram, RoundMetrics, RunStatus, SimError,
    TracedEnvelope,
};
use crate::walk::{self, Step};

use super::table::{CouponId, CouponStatus, ShortWalkTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WalkId {
    pub source: u32,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkToken {
    pub walk: WalkId,
    /// Pieces appended so far.
    pub pos: u32,
    /// Steps completed so far.
    pub length: u32,
    /// Naive hops owed after an exhausted coupon pool.
    pub naive_left: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase2Msg {
    /// The token jumps to the destination of `coupon`.
    Segment {
        token: WalkToken,
        coupon: CouponId,
        hops: u32,
        terminal: bool,
    },
    /// One naive hop along an edge.
    Step { token: WalkToken },
}

impl Phase2Msg {
    /// Walk steps this message carries the token forward by.
    pub fn moves(&self) -> u64 {
        match self {
            Phase2Msg::Segment { hops, .. } => *hops as u64,
            Phase2Msg::Step { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Piece {
    Segment(CouponId),
    /// A naive hop arriving at this node.
    Step(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct WalkEvent {
    walk: WalkId,
    pos: u32,
    piece: Piece,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct WalkEnd {
    walk: WalkId,
    at: NodeId,
    length: u32,
    truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Stitch,
    Tail,
}

/// Per-node state of the stitching phase.
#[derive(Debug, Default)]
pub struct Phase2Node {
    unused: Vec<u32>,
    used: Vec<u32>,
    ready: Vec<WalkToken>,
    parked: Vec<WalkToken>,
    events: Vec<WalkEvent>,
    ends: Vec<WalkEnd>,
    /// Used coupons that landed here, with their hop counts.
    landed: Vec<(CouponId, u32)>,
    zeta_steps: u64,
    stitches: u64,
    exhaustions: u64,
    truncations: u64,
}

#[derive(Debug, Clone, Copy)]
struct Widths {
    segment: u64,
    step: u64,
}

struct Phase2Program<'a> {
    table: &'a ShortWalkTable,
    epsilon: f64,
    ell: u32,
    mode: Mode,
    widths: Widths,
}

impl Phase2Program<'_> {
    fn advance(
        &self,
        state: &mut Phase2Node,
        mut token: WalkToken,
        ctx: &mut Context<'_, Phase2Msg>,
    ) -> Result<(), SimError> {
        let node = ctx.node();
        let lambda = self.table.lambda;
        loop {
            if self.mode == Mode::Tail || token.naive_left > 0 {
                if token.length >= self.ell {
                    state.truncations += 1;
                    state.ends.push(WalkEnd {
                        walk: token.walk,
                        at: node,
                        length: token.length,
                        truncated: true,
                    });
                    return Ok(());
                }
                let neighbors = ctx.out_neighbors();
                let step = walk::step(ctx.rng(), self.epsilon, neighbors);
                match step.map_err(|e| ctx.fail(e.to_string()))? {
                    Step::Terminate => {
                        state.ends.push(WalkEnd {
                            walk: token.walk,
                            at: node,
                            length: token.length,
                            truncated: false,
                        });
                    }
                    Step::MoveTo(next) => {
                        token.length += 1;
                        token.pos += 1;
                        token.naive_left = token.naive_left.saturating_sub(1);
                        ctx.send_edge(next, self.widths.step, Phase2Msg::Step { token })?;
                    }
                }
                return Ok(());
            }
            if token.length + lambda >= self.ell {
                state.parked.push(token);
                return Ok(());
            }
            if state.unused.is_empty() {
                state.exhaustions += 1;
                token.naive_left = lambda;
                continue;
            }
            let pick = ctx.rng().random_range(0..state.unused.len());
            let seq = state.unused.swap_remove(pick);
            state.used.push(seq);
            state.stitches += 1;
            let coupon = &self.table.created[node][seq as usize];
            let destination = coupon
                .destination
                .ok_or_else(|| ctx.fail(format!("coupon {seq} has no destination")))?;
            let terminal = coupon.status == CouponStatus::LandedReset;
            token.length += coupon.hops_taken;
            token.pos += 1;
            let msg = Phase2Msg::Segment {
                token,
                coupon: coupon.id,
                hops: coupon.hops_taken,
                terminal,
            };
            return ctx.send_direct(destination, self.widths.segment, msg);
        }
    }
}

impl NodeProgram for Phase2Program<'_> {
    type State = Phase2Node;
    type Message = Phase2Msg;

    fn init(&self, _node: NodeId, _graph: &Graph) -> Phase2Node {
        Phase2Node::default()
    }

    fn on_round(
        &self,
        state: &mut Phase2Node,
        inbox: &[Envelope<Phase2Msg>],
        ctx: &mut Context<'_, Phase2Msg>,
    ) -> Result<(), SimError> {
        let node = ctx.node();
        for envelope in inbox {
            match envelope.payload {
                Phase2Msg::Segment {
                    token,
                    coupon,
                    hops,
                    terminal,
                } => {
                    state.events.push(WalkEvent {
                        walk: token.walk,
                        pos: token.pos,
                        piece: Piece::Segment(coupon),
                    });
                    state.landed.push((coupon, hops));
                    if terminal {
                        state.ends.push(WalkEnd {
                            walk: token.walk,
                            at: node,
                            length: token.length,
                            truncated: false,
                        });
                    } else {
                        state.ready.push(token);
                    }
                }
                Phase2Msg::Step { token } => {
                    state.zeta_steps += 1;
                    state.events.push(WalkEvent {
                        walk: token.walk,
                        pos: token.pos,
                        piece: Piece::Step(node),
                    });
                    state.ready.push(token);
                }
            }
        }
        for token in std::mem::take(&mut state.ready) {
            self.advance(state, token, ctx)?;
        }
        Ok(())
    }

    fn is_quiescent(&self, state: &Phase2Node) -> bool {
        state.ready.is_empty()
    }
}

/// One long walk as assembled from the pieces recorded at the nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LongWalk {
    pub id: WalkId,
    /// The source, then the destination of each segment.
    pub connectors: Vec<NodeId>,
    pub pieces: Vec<Piece>,
    pub endpoint: NodeId,
    pub length: u32,
    pub truncated: bool,
}

impl LongWalk {
    pub fn source(&self) -> NodeId {
        self.id.source as NodeId
    }

    pub fn segments(&self) -> impl Iterator<Item = CouponId> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Segment(c) => Some(*c),
            Piece::Step(_) => None,
        })
    }

    /// Every node occupied by the walk, source first.
    pub fn trajectory(&self, table: &ShortWalkTable) -> Option<Vec<NodeId>> {
        let mut nodes = vec![self.source()];
        for piece in &self.pieces {
            match *piece {
                Piece::Segment(c) => {
                    let path = table.path(c)?;
                    if path[0] != *nodes.last()? {
                        return None;
                    }
                    nodes.extend_from_slice(&path[1..]);
                }
                Piece::Step(v) => nodes.push(v),
            }
        }
        Some(nodes)
    }
}

/// All long walks, sorted by walk id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConnectorSet {
    pub walks: Vec<LongWalk>,
}

impl ConnectorSet {
    pub fn walk(&self, id: WalkId) -> Option<&LongWalk> {
        self.walks
            .binary_search_by_key(&id, |w| w.id)
            .ok()
            .map(|i| &self.walks[i])
    }

    pub fn endpoints(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.walks.iter().map(|w| w.endpoint)
    }
}

#[derive(Debug)]
pub struct Phase2Outcome {
    pub connectors: ConnectorSet,
    /// Used coupons that landed at each node.
    pub landed: Vec<Vec<(CouponId, u32)>>,
    /// Visits from naive hops, counted on arrival.
    pub zeta_steps: Vec<u64>,
    pub stitch_metrics: RoundMetrics,
    pub tail_metrics: RoundMetrics,
    pub stitches: u64,
    pub exhaustions: u64,
    pub truncations: u64,
    /// Envelopes of both runs, stitch run first; empty unless tracing.
    pub trace: Vec<TracedEnvelope<Phase2Msg>>,
}

/// Stitches `walks_per_node` long walks from every node out of the coupons in
/// `table`, marking the coupons it consumes as used.
pub fn phase2(
    graph: &Graph,
    table: &mut ShortWalkTable,
    walks_per_node: u64,
    epsilon: f64,
    ell: u32,
    seeds: (u64, u64),
    options: &RunOptions,
) -> Result<Phase2Outcome, AlgoError> {
    let n = graph.node_count();
    if table.lambda == 0 {
        return Err(AlgoError::InvalidParams(
            "stitching needs a short-walk length of at least 1".into(),
        ));
    }
    if table.created.len() != n || table.traces.len() != n {
        return Err(AlgoError::InvalidParams(
            "short-walk table does not match the graph".into(),
        ));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(AlgoError::InvalidParams(format!(
            "epsilon = {epsilon} is not in [0, 1]"
        )));
    }
    if walks_per_node == 0 || walks_per_node > u32::MAX as u64 {
        return Err(AlgoError::InvalidParams(format!(
            "{walks_per_node} walks per node"
        )));
    }

    let most = table.created.iter().map(Vec::len).max().unwrap_or(0) as u64;
    let walk_bits = id_bits(n).max(1) + counter_bits(walks_per_node - 1);
    let token_bits =
        walk_bits + 2 * counter_bits(ell as u64 + 1) + counter_bits(table.lambda as u64);
    let widths = Widths {
        segment: token_bits
            + id_bits(n).max(1)
            + counter_bits(most.saturating_sub(1))
            + counter_bits(table.lambda as u64)
            + 1,
        step: token_bits,
    };

    let states: Vec<Phase2Node> = (0..n)
        .map(|v| Phase2Node {
            unused: (0..table.created[v].len() as u32).collect(),
            ready: (0..walks_per_node as u32)
                .map(|index| WalkToken {
                    walk: WalkId {
                        source: v as u32,
                        index,
                    },
                    pos: 0,
                    length: 0,
                    naive_left: 0,
                })
                .collect(),
            ..Phase2Node::default()
        })
        .collect();

    let mut program = Phase2Program {
        table,
        epsilon,
        ell,
        mode: Mode::Stitch,
        widths,
    };
    let stitch_cap = 2 * ell as u64 + 4 * table.lambda as u64 + 10;
    let config = options.sim_config(seeds.0, stitch_cap);
    let stitched = sim::run_from(graph, &program, states, &config)?;
    if stitched.status == RunStatus::RoundLimit {
        return Err(AlgoError::RoundLimit {
            phase: "stitching",
            rounds: config.max_rounds,
        });
    }
    let mut trace = stitched.trace;

    let mut states = stitched.states;
    for state in &mut states {
        state.ready = std::mem::take(&mut state.parked);
    }
    program.mode = Mode::Tail;
    let config = options.sim_config(seeds.1, ell as u64 + 10);
    let tailed = sim::run_from(graph, &program, states, &config)?;
    if tailed.status == RunStatus::RoundLimit {
        return Err(AlgoError::RoundLimit {
            phase: "naive tail",
            rounds: config.max_rounds,
        });
    }
    trace.extend(tailed.trace);

    let mut states = tailed.states;
    for (v, state) in states.iter_mut().enumerate() {
        for &seq in &state.used {
            let coupon = &mut table.created[v][seq as usize];
            if coupon.used {
                return Err(AlgoError::Sim(SimError::Program {
                    round: 0,
                    node: v,
                    reason: format!("coupon {seq} consumed twice"),
                }));
            }
            coupon.used = true;
        }
    }

    let connectors = assemble(&mut states, table).map_err(AlgoError::InvalidParams)?;
    Ok(Phase2Outcome {
        connectors,
        stitches: states.iter().map(|s| s.stitches).sum(),
        exhaustions: states.iter().map(|s| s.exhaustions).sum(),
        truncations: states.iter().map(|s| s.truncations).sum(),
        zeta_steps: states.iter().map(|s| s.zeta_steps).collect(),
        landed: states.into_iter().map(|s| s.landed).collect(),
        stitch_metrics: stitched.metrics,
        tail_metrics: tailed.metrics,
        trace,
    })
}

fn assemble(states: &mut [Phase2Node], table: &ShortWalkTable) -> Result<ConnectorSet, String> {
    let mut events: Vec<WalkEvent> = states
        .iter_mut()
        .flat_map(|s| std::mem::take(&mut s.events))
        .collect();
    let mut ends: Vec<WalkEnd> = states
        .iter_mut()
        .flat_map(|s| std::mem::take(&mut s.ends))
        .collect();
    events.sort_unstable_by_key(|e| (e.walk, e.pos));
    ends.sort_unstable_by_key(|e| e.walk);

    let mut walks = Vec::with_capacity(ends.len());
    let mut cursor = 0;
    for end in ends {
        let source = end.walk.source as NodeId;
        let mut connectors = vec![source];
        let mut pieces = Vec::new();
        while cursor < events.len() && events[cursor].walk == end.walk {
            let event = events[cursor];
            if event.pos as usize != pieces.len() + 1 {
                return Err(format!(
                    "walk {:?} is missing piece {}",
                    end.walk,
                    pieces.len() + 1
                ));
            }
            if let Piece::Segment(c) = event.piece {
                connectors.push(
                    table
                        .coupon(c)
                        .and_then(|c| c.destination)
                        .ok_or("unknown coupon")?,
                );
            }
            pieces.push(event.piece);
            cursor += 1;
        }
        walks.push(LongWalk {
            id: end.walk,
            connectors,
            pieces,
            endpoint: end.at,
            length: end.length,
            truncated: end.truncated,
        });
    }
    if cursor != events.len() {
        return Err("pieces recorded for a walk that never ended".into());
    }
    if walks.windows(2).any(|w| w[0].id == w[1].id) {
        return Err("a walk ended twice".into());
    }
    Ok(ConnectorSet { walks })
}
