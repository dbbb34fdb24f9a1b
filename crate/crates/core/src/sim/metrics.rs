//! Round and bit accounting for simulated runs.

use std::io::{self, Write};

use serde::Serialize;

use crate::graph::NodeId;

use super::Channel;

/// Bits needed to name one of `n` nodes: ceil(log2 n), zero for a single node.
pub fn id_bits(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(usize::BITS - (n - 1).leading_zeros())
    }
}

/// Fixed per-envelope header: source and destination ids.
pub fn header_bits(n: usize) -> u64 {
    2 * id_bits(n)
}

/// Cost of an integer counter value c: ceil(log2(c + 1)) bits, at least one.
pub fn counter_bits(value: u64) -> u64 {
    u64::from(u64::BITS - value.leading_zeros()).max(1)
}

/// Traffic aggregated over one directed link in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkTraffic {
    pub round: u64,
    pub src: NodeId,
    pub dst: NodeId,
    /// Header plus payload bits of every envelope on this link this round.
    pub bits: u64,
    pub messages: u64,
}

/// An (edge, direction, round) entry above the audit budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongestionViolation {
    pub round: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundMetrics {
    pub rounds_elapsed: u64,
    pub header_bits: u64,
    /// Edge-channel traffic sorted by `(round, src, dst)`.
    pub per_edge_bits: Vec<LinkTraffic>,
    /// Direct-channel traffic sorted by `(round, src, dst)`.
    pub direct_traffic: Vec<LinkTraffic>,
    /// Total direct-channel bits, indexed by `round - 1`.
    pub direct_bits: Vec<u64>,
    pub max_edge_bits_per_round: u64,
    pub message_count: u64,
    pub edge_message_count: u64,
    pub direct_message_count: u64,
}

/// The scalar part of [`RoundMetrics`], for JSON export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricsSummary {
    pub rounds: u64,
    pub max_edge_bits_per_round: u64,
    pub edge_bits_total: u64,
    pub direct_bits_total: u64,
    pub message_count: u64,
    pub edge_message_count: u64,
    pub direct_message_count: u64,
    pub header_bits: u64,
}

impl RoundMetrics {
    pub fn new(header_bits: u64) -> Self {
        Self {
            header_bits,
            ..Self::default()
        }
    }

    pub(crate) fn record(&mut self, round: u64, channel: Channel, link: LinkTraffic) {
        debug_assert_eq!(link.round, round);
        self.message_count += link.messages;
        match channel {
            Channel::Edge => {
                self.edge_message_count += link.messages;
                self.max_edge_bits_per_round = self.max_edge_bits_per_round.max(link.bits);
                self.per_edge_bits.push(link);
            }
            Channel::Direct => {
                self.direct_message_count += link.messages;
                let slot = (round - 1) as usize;
                if self.direct_bits.len() <= slot {
                    self.direct_bits.resize(slot + 1, 0);
                }
                self.direct_bits[slot] += link.bits;
                self.direct_traffic.push(link);
            }
        }
    }

    /// Appends a run that executed after this one, shifting its rounds.
    pub fn append(&mut self, later: &RoundMetrics) {
        let offset = self.rounds_elapsed;
        let shift = |link: &LinkTraffic| LinkTraffic {
            round: link.round + offset,
            ..*link
        };
        self.per_edge_bits
            .extend(later.per_edge_bits.iter().map(shift));
        self.direct_traffic
            .extend(later.direct_traffic.iter().map(shift));
        self.direct_bits.resize(offset as usize, 0);
        self.direct_bits.extend_from_slice(&later.direct_bits);
        self.rounds_elapsed += later.rounds_elapsed;
        self.max_edge_bits_per_round = self
            .max_edge_bits_per_round
            .max(later.max_edge_bits_per_round);
        self.message_count += later.message_count;
        self.edge_message_count += later.edge_message_count;
        self.direct_message_count += later.direct_message_count;
        self.header_bits = self.header_bits.max(later.header_bits);
    }

    pub fn edge_bits_total(&self) -> u64 {
        self.per_edge_bits.iter().map(|l| l.bits).sum()
    }

    pub fn direct_bits_total(&self) -> u64 {
        self.direct_bits.iter().sum()
    }

    /// Number of rounds in which at least one envelope was sent.
    pub fn active_rounds(&self) -> u64 {
        let mut rounds: Vec<u64> = self
            .per_edge_bits
            .iter()
            .chain(&self.direct_traffic)
            .map(|l| l.round)
            .collect();
        rounds.sort_unstable();
        rounds.dedup();
        rounds.len() as u64
    }

    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            rounds: self.rounds_elapsed,
            max_edge_bits_per_round: self.max_edge_bits_per_round,
            edge_bits_total: self.edge_bits_total(),
            direct_bits_total: self.direct_bits_total(),
            message_count: self.message_count,
            edge_message_count: self.edge_message_count,
            direct_message_count: self.direct_message_count,
            header_bits: self.header_bits,
        }
    }

    /// Per-round per-link rows: `round,src,dst,channel,bits`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "round,src,dst,channel,bits")?;
        let mut rows: Vec<(&LinkTraffic, &str)> = self
            .per_edge_bits
            .iter()
            .map(|l| (l, "edge"))
            .chain(self.direct_traffic.iter().map(|l| (l, "direct")))
            .collect();
        rows.sort_by_key(|(l, channel)| (l.round, l.src, l.dst, *channel));
        for (l, channel) in rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                l.round, l.src, l.dst, channel, l.bits
            )?;
        }
        Ok(())
    }
}

/// Every (edge, direction, round) whose bits exceed `budget_bits`. Direct
/// traffic is outside the edge budget and never reported.
pub fn audit_congestion(metrics: &RoundMetrics, budget_bits: u64) -> Vec<CongestionViolation> {
    metrics
        .per_edge_bits
        .iter()
        .filter(|l| l.bits > budget_bits)
        .map(|l| CongestionViolation {
            round: l.round,
            src: l.src,
            dst: l.dst,
            bits: l.bits,
        })
        .collect()
}
