//! Coupon forwarding with anonymous per-edge counts.
//!
//! Every node starts K coupons. In each round a node holding m coupons kills
//! each one with probability epsilon and spreads the survivors uniformly over
//! its out-neighbors; only the number of coupons crossing each edge travels,
//! so one counter per edge direction per round is the whole traffic. Arrivals
//! and starting placements are the visits.

use std::collections::HashMap;

use rand_distr::{Binomial, Distribution};

use crate::graph::{Graph, NodeId};
use crate::oracle::Trajectory;
use crate::run::{AlgoError, RunOptions};
use crate::sim::{
    self, counter_bits, header_bits, Context, Envelope, NodeProgram, NodeRng, RoundMetrics,
    RunStatus, SimError, TracedEnvelope,
};
use crate::walk::{self, ScoreVector, WalkParams};

/// Number of coupons sent over one edge in one round. Never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountMessage {
    pub count: u64,
}

/// Decides how the coupons held at a node in a round split into deaths and
/// moves.
pub trait CouponSplitter: Sync {
    /// Writes per-neighbor move counts into `moves` (indexed like the node's
    /// out-neighbor list) and returns the number of deaths.
    fn split(
        &self,
        node: NodeId,
        round: u64,
        coupons: u64,
        epsilon: f64,
        rng: &mut NodeRng,
        moves: &mut [u64],
    ) -> Result<u64, String>;
}

/// Binomial deaths, then a multinomial split of survivors, drawn as a chain
/// of conditional binomials.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampledSplit;

impl CouponSplitter for SampledSplit {
    fn split(
        &self,
        _node: NodeId,
        _round: u64,
        coupons: u64,
        epsilon: f64,
        rng: &mut NodeRng,
        moves: &mut [u64],
    ) -> Result<u64, String> {
        let deaths = binomial(coupons, epsilon, rng)?;
        let mut left = coupons - deaths;
        let d = moves.len();
        for (i, slot) in moves.iter_mut().enumerate() {
            let share = if i + 1 == d {
                left
            } else {
                binomial(left, 1.0 / (d - i) as f64, rng)?
            };
            *slot = share;
            left -= share;
        }
        Ok(deaths)
    }
}

fn binomial(trials: u64, p: f64, rng: &mut NodeRng) -> Result<u64, String> {
    if trials == 0 {
        return Ok(0);
    }
    Binomial::new(trials, p.clamp(0.0, 1.0))
        .map(|b| b.sample(rng))
        .map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Decision {
    deaths: u64,
    moves: Vec<u64>,
}

/// Replays the per-walk choices of a centralized simulation: for each (round,
/// node) it knows how many walks stopped and how many took each edge.
#[derive(Debug, Clone, Default)]
pub struct ReplaySplit {
    decisions: HashMap<(u64, NodeId), Decision>,
}

impl ReplaySplit {
    pub fn from_trajectories(
        graph: &Graph,
        trajectories: &[Trajectory],
    ) -> Result<Self, AlgoError> {
        let mut decisions: HashMap<(u64, NodeId), Decision> = HashMap::new();
        for t in trajectories {
            if t.truncated {
                return Err(AlgoError::InvalidParams(
                    "cannot replay a truncated walk".into(),
                ));
            }
            for (j, &at) in t.nodes.iter().enumerate() {
                let degree = graph.out_degree(at);
                let entry = decisions
                    .entry((j as u64 + 1, at))
                    .or_insert_with(|| Decision {
                        deaths: 0,
                        moves: vec![0; degree],
                    });
                match t.nodes.get(j + 1) {
                    None => entry.deaths += 1,
                    Some(next) => {
                        let i = graph.out_neighbors(at).binary_search(next).map_err(|_| {
                            AlgoError::InvalidParams(format!(
                                "trajectory uses missing edge {at} -> {next}"
                            ))
                        })?;
                        entry.moves[i] += 1;
                    }
                }
            }
        }
        Ok(Self { decisions })
    }
}

impl CouponSplitter for ReplaySplit {
    fn split(
        &self,
        node: NodeId,
        round: u64,
        coupons: u64,
        _epsilon: f64,
        _rng: &mut NodeRng,
        moves: &mut [u64],
    ) -> Result<u64, String> {
        let decision = self
            .decisions
            .get(&(round, node))
            .ok_or_else(|| format!("no replayed decision for {coupons} coupons"))?;
        let logged = decision.deaths + decision.moves.iter().sum::<u64>();
        if logged != coupons {
            return Err(format!(
                "replay log holds {logged} coupons, node holds {coupons}"
            ));
        }
        moves.copy_from_slice(&decision.moves);
        Ok(decision.deaths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CouponTally {
    /// Coupons processed this round.
    pub held: u64,
    pub deaths: u64,
}

#[derive(Debug, Default)]
pub struct SimpleNode {
    live: u64,
    zeta: u64,
    tallies: Vec<(u64, CouponTally)>,
}

struct SimpleProgram<'a, S> {
    walks_per_node: u64,
    epsilon: f64,
    splitter: &'a S,
}

impl<S: CouponSplitter> NodeProgram for SimpleProgram<'_, S> {
    type State = SimpleNode;
    type Message = CountMessage;

    fn init(&self, _node: NodeId, _graph: &Graph) -> SimpleNode {
        // Starting placements count as visits.
        SimpleNode {
            live: self.walks_per_node,
            zeta: self.walks_per_node,
            tallies: Vec::new(),
        }
    }

    fn on_round(
        &self,
        state: &mut SimpleNode,
        inbox: &[Envelope<CountMessage>],
        ctx: &mut Context<'_, CountMessage>,
    ) -> Result<(), SimError> {
        let arrivals: u64 = inbox.iter().map(|e| e.payload.count).sum();
        state.zeta += arrivals;
        let held = std::mem::take(&mut state.live) + arrivals;
        if held == 0 {
            return Ok(());
        }
        let neighbors = ctx.out_neighbors();
        if neighbors.is_empty() {
            return Err(ctx.fail("holding coupons at a node without out-neighbors"));
        }
        let mut moves = vec![0u64; neighbors.len()];
        let (node, round) = (ctx.node(), ctx.round());
        let deaths = self
            .splitter
            .split(node, round, held, self.epsilon, ctx.rng(), &mut moves)
            .map_err(|reason| ctx.fail(reason))?;
        if deaths + moves.iter().sum::<u64>() != held {
            return Err(ctx.fail("coupon split does not conserve coupons"));
        }
        state.tallies.push((round, CouponTally { held, deaths }));
        for (&to, &count) in neighbors.iter().zip(&moves) {
            if count > 0 {
                ctx.send_edge(to, counter_bits(count), CountMessage { count })?;
            }
        }
        Ok(())
    }

    fn is_quiescent(&self, state: &SimpleNode) -> bool {
        state.live == 0
    }
}

#[derive(Debug)]
pub struct SimpleOutcome {
    pub scores: ScoreVector,
    pub metrics: RoundMetrics,
    /// Global coupon tallies, indexed by `round - 1`.
    pub tallies: Vec<CouponTally>,
    pub trace: Vec<TracedEnvelope<CountMessage>>,
}

impl SimpleOutcome {
    /// Coupon moves summed over the recorded trace.
    pub fn traced_moves(&self) -> u64 {
        self.trace.iter().map(|t| t.envelope.payload.count).sum()
    }
}

/// Per-edge budget under which every count message fits: the envelope header
/// plus ceil(log2(nK + 1)) bits.
pub fn congest_budget(n: usize, walks_per_node: u64) -> u64 {
    header_bits(n) + counter_bits(n as u64 * walks_per_node)
}

/// Round cap well past the geometric tail of the longest walk.
pub fn default_round_cap(n: usize, walks_per_node: u64, epsilon: f64) -> u64 {
    let walks = (n as f64) * (walks_per_node as f64);
    10 * walk::ceil_count((walks + 1.0).ln() / epsilon).max(1) + 10
}

pub fn run_simple(
    graph: &Graph,
    params: &WalkParams,
    options: &RunOptions,
) -> Result<SimpleOutcome, AlgoError> {
    run_with_splitter(graph, params, options, &SampledSplit)
}

/// Drives the distributed algorithm with the choices recorded in
/// `trajectories`, so its visit counts must reproduce theirs exactly.
pub fn replay_simple(
    graph: &Graph,
    params: &WalkParams,
    trajectories: &[Trajectory],
    options: &RunOptions,
) -> Result<SimpleOutcome, AlgoError> {
    let splitter = ReplaySplit::from_trajectories(graph, trajectories)?;
    run_with_splitter(graph, params, options, &splitter)
}

pub fn run_with_splitter<S: CouponSplitter>(
    graph: &Graph,
    params: &WalkParams,
    options: &RunOptions,
    splitter: &S,
) -> Result<SimpleOutcome, AlgoError> {
    graph.ensure_valid()?;
    params.validate()?;
    let n = graph.node_count();
    let program = SimpleProgram {
        walks_per_node: params.walks_per_node,
        epsilon: params.epsilon,
        splitter,
    };
    let config = options.sim_config(
        options.seed,
        default_round_cap(n, params.walks_per_node, params.epsilon),
    );
    let outcome = sim::run(graph, &program, &config)?;
    if outcome.status == RunStatus::RoundLimit {
        return Err(AlgoError::RoundLimit {
            phase: "coupon forwarding",
            rounds: config.max_rounds,
        });
    }

    let mut tallies = vec![CouponTally::default(); outcome.metrics.rounds_elapsed as usize];
    for node in &outcome.states {
        for &(round, tally) in &node.tallies {
            let slot = &mut tallies[round as usize - 1];
            slot.held += tally.held;
            slot.deaths += tally.deaths;
        }
    }
    while tallies.last().is_some_and(|t| t.held == 0) {
        tallies.pop();
    }
    let zeta = outcome.states.iter().map(|s| s.zeta).collect();
    Ok(SimpleOutcome {
        scores: walk::estimate(zeta, n, params.walks_per_node, params.epsilon),
        metrics: outcome.metrics,
        tallies,
        trace: outcome.trace,
    })
}
