use serde::Serialize;

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CouponId {
    pub source: u32,
    pub seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouponStatus {
    InFlight,
    /// Walked all `target_len` hops.
    LandedFull,
    /// Stopped by a reset before `target_len` hops.
    LandedReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShortWalkCoupon {
    pub id: CouponId,
    pub target_len: u32,
    pub hops_taken: u32,
    pub status: CouponStatus,
    pub destination: Option<NodeId>,
    pub used: bool,
}

impl ShortWalkCoupon {
    pub(crate) fn new(id: CouponId, target_len: u32) -> Self {
        Self {
            id,
            target_len,
            hops_taken: 0,
            status: CouponStatus::InFlight,
            destination: None,
            used: false,
        }
    }

    pub fn source(&self) -> NodeId {
        self.id.source as NodeId
    }

    pub fn is_landed(&self) -> bool {
        self.status != CouponStatus::InFlight
    }
}

/// One hop of a short walk, stored at the node the hop arrived at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TraceEntry {
    pub coupon: CouponId,
    /// Hop index, 1-based: the coupon reached this node after `step` hops.
    pub step: u32,
    pub pred: NodeId,
}

/// The trace entries hosted at one node, sorted by `(coupon, step)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceStore {
    entries: Vec<TraceEntry>,
}

impl TraceStore {
    pub(crate) fn from_unsorted(mut entries: Vec<TraceEntry>) -> Self {
        entries.sort_unstable();
        Self { entries }
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Predecessor of the hop `step` of `coupon` into this node.
    pub fn predecessor(&self, coupon: CouponId, step: u32) -> Option<NodeId> {
        self.entries
            .binary_search_by(|e| (e.coupon, e.step).cmp(&(coupon, step)))
            .ok()
            .map(|i| self.entries[i].pred)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortWalkTable {
    pub lambda: u32,
    /// Coupons created by each node, indexed by sequence number.
    pub created: Vec<Vec<ShortWalkCoupon>>,
    /// Trace entries hosted by each node.
    pub traces: Vec<TraceStore>,
}

impl ShortWalkTable {
    pub fn coupon(&self, id: CouponId) -> Option<&ShortWalkCoupon> {
        self.created.get(id.source as usize)?.get(id.seq as usize)
    }

    pub fn coupon_count(&self) -> usize {
        self.created.iter().map(Vec::len).sum()
    }

    pub fn used_count(&self) -> usize {
        self.created.iter().flatten().filter(|c| c.used).count()
    }

    pub fn trace_entry_count(&self) -> usize {
        self.traces.iter().map(TraceStore::len).sum()
    }

    /// Nodes visited by a landed coupon, source first, rebuilt by following
    /// predecessor entries back from the destination.
    pub fn path(&self, id: CouponId) -> Option<Vec<NodeId>> {
        let coupon = self.coupon(id)?;
        let mut at = coupon.destination?;
        let mut nodes = vec![at];
        for step in (1..=coupon.hops_taken).rev() {
            at = self.traces.get(at)?.predecessor(id, step)?;
            nodes.push(at);
        }
        if at != coupon.source() {
            return None;
        }
        nodes.reverse();
        Some(nodes)
    }
}
