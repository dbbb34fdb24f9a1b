//! The network: an immutable adjacency structure over dense node ids.

mod edgelist;
mod generate;

pub use edgelist::{load_edge_list, parse_edge_list, LoadOptions};
pub use generate::{generate, GeneratorKind, GeneratorSpec};

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Dense node identifier in `0..n`.
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: node id {id} out of range for n = {n}")]
    IdOutOfRange { line: usize, id: usize, n: usize },
    #[error("line {line}: duplicate edge {u} {v}")]
    DuplicateEdge { line: usize, u: NodeId, v: NodeId },
    #[error("graph has no nodes")]
    Empty,
    #[error("node {0} has outdeg 0")]
    Dangling(NodeId),
    #[error("graph is invalid: {0}")]
    Invalid(Violation),
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("generator produced no connected graph after {0} attempts")]
    Unconnected(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One broken graph invariant, as reported by [`Graph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NeighborOutOfRange { node: NodeId, neighbor: NodeId },
    DuplicateEdge { u: NodeId, v: NodeId },
    AsymmetricEdge { u: NodeId, v: NodeId },
    DanglingNode(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty graph"),
            Violation::NeighborOutOfRange { node, neighbor } => {
                write!(f, "neighbor out of range: {node} -> {neighbor}")
            }
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge: {u} -> {v}"),
            Violation::AsymmetricEdge { u, v } => write!(f, "asymmetric edge: {u} -> {v}"),
            Violation::DanglingNode(v) => write!(f, "dangling node: {v}"),
        }
    }
}

/// A directed or undirected simple graph.
///
/// Undirected graphs store every edge in both endpoint lists; a self-loop is
/// stored once. Neighbor lists are kept sorted ascending so that iteration
/// order, and therefore every seeded random choice, is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    adjacency: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph from an edge list and validates it.
    pub fn from_edges(
        n: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let graph = Self::from_edges_unvalidated(n, directed, edges)?;
        graph.ensure_valid()?;
        Ok(graph)
    }

    /// Like [`Graph::from_edges`] but accepts dangling nodes. Duplicate edges
    /// and out-of-range ids are still rejected.
    pub fn from_edges_unvalidated(
        n: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        for (line, (u, v)) in edges.into_iter().enumerate() {
            for id in [u, v] {
                if id >= n {
                    return Err(GraphError::IdOutOfRange {
                        line: line + 1,
                        id,
                        n,
                    });
                }
            }
            adjacency[u].push(v);
            if !directed && u != v {
                adjacency[v].push(u);
            }
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge {
                    line: 0,
                    u,
                    v: w[0],
                });
            }
        }
        Ok(Self {
            directed,
            adjacency,
        })
    }

    /// Wraps raw adjacency lists without any checking. Intended for building
    /// deliberately broken fixtures for [`Graph::validate`].
    pub fn from_adjacency_unchecked(directed: bool, adjacency: Vec<Vec<NodeId>>) -> Self {
        Self {
            directed,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of stored edges; undirected edges count once.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.adjacency.iter().map(Vec::len).sum()
        } else {
            self.edges().count()
        }
    }

    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    /// d(v) for undirected graphs, outdeg(v) for directed ones.
    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut indeg = vec![0; self.node_count()];
        for list in &self.adjacency {
            for &v in list {
                indeg[v] += 1;
            }
        }
        indeg
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    /// Edges in ascending `(u, v)` order; undirected edges once with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let directed = self.directed;
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(move |(u, list)| {
                list.iter()
                    .copied()
                    .filter(move |&v| directed || u <= v)
                    .map(move |v| (u, v))
            })
    }

    /// Checks every invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.node_count();
        let mut violations = Vec::new();
        if n == 0 {
            violations.push(Violation::Empty);
            return violations;
        }
        for (u, list) in self.adjacency.iter().enumerate() {
            let mut seen = list.clone();
            seen.sort_unstable();
            for w in seen.windows(2) {
                if w[0] == w[1] {
                    violations.push(Violation::DuplicateEdge { u, v: w[0] });
                }
            }
            for &v in list {
                if v >= n {
                    violations.push(Violation::NeighborOutOfRange {
                        node: u,
                        neighbor: v,
                    });
                } else if !self.directed && !self.adjacency[v].contains(&u) {
                    violations.push(Violation::AsymmetricEdge { u, v });
                }
            }
            if list.is_empty() {
                violations.push(Violation::DanglingNode(u));
            }
        }
        violations
    }

    /// First violation as an error, or `Ok` for a graph the algorithms accept.
    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        match self.validate().into_iter().next() {
            None => Ok(()),
            Some(Violation::DanglingNode(v)) => Err(GraphError::Dangling(v)),
            Some(Violation::Empty) => Err(GraphError::Empty),
            Some(other) => Err(GraphError::Invalid(other)),
        }
    }

    /// Adds a self-loop to every node without out-neighbors.
    pub fn patch_dangling_with_self_loops(&mut self) -> Vec<NodeId> {
        let mut patched = Vec::new();
        for (v, list) in self.adjacency.iter_mut().enumerate() {
            if list.is_empty() {
                list.push(v);
                patched.push(v);
            }
        }
        patched
    }

    /// Weak connectivity (edge direction ignored).
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut undirected = vec![Vec::new(); n];
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                undirected[u].push(v);
                undirected[v].push(u);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &undirected[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// Serializes to the edge-list text format accepted by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "{} {}\n",
            if self.directed {
                "directed"
            } else {
                "undirected"
            },
            self.node_count()
        );
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undirected_degree_sum_is_twice_edge_count() {
        let g = Graph::from_edges(4, false, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let total: usize = (0..4).map(|v| g.degree(v)).sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn symmetric_graph_validates() {
        let g = Graph::from_edges(3, false, [(0, 1), (1, 2)]).unwrap();
        assert!(g.validate().is_empty());
    }

    #[test]
    fn one_sided_edge_is_asymmetric() {
        let g = Graph::from_adjacency_unchecked(false, vec![vec![1], vec![0, 2], vec![1, 0]]);
        let violations = g.validate();
        assert_eq!(violations, vec![Violation::AsymmetricEdge { u: 2, v: 0 }]);
        assert!(violations[0].to_string().starts_with("asymmetric edge"));
    }

    #[test]
    fn sink_is_dangling() {
        let g = Graph::from_edges_unvalidated(3, true, [(0, 1), (1, 0), (1, 2)]).unwrap();
        let violations = g.validate();
        assert_eq!(violations, vec![Violation::DanglingNode(2)]);
        assert!(violations[0].to_string().starts_with("dangling node"));
    }

    #[test]
    fn validate_reports_every_violation() {
        let g = Graph::from_adjacency_unchecked(false, vec![vec![1, 1, 5], vec![], vec![0]]);
        let violations = g.validate();
        assert!(violations.contains(&Violation::DuplicateEdge { u: 0, v: 1 }));
        assert!(violations.contains(&Violation::NeighborOutOfRange {
            node: 0,
            neighbor: 5
        }));
        assert!(violations.contains(&Violation::AsymmetricEdge { u: 2, v: 0 }));
        assert!(violations.contains(&Violation::DanglingNode(1)));
    }

    #[test]
    fn duplicate_edges_rejected() {
        let err = Graph::from_edges(2, false, [(0, 1), (1, 0)]).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge { .. }));
    }

    #[test]
    fn empty_graph_rejected() {
        assert_eq!(
            Graph::from_edges(0, true, []).unwrap_err(),
            GraphError::Empty
        );
        assert_eq!(
            Graph::from_adjacency_unchecked(true, vec![]).validate(),
            vec![Violation::Empty]
        );
    }

    #[test]
    fn self_loop_patch_repairs_sinks() {
        let mut g = Graph::from_edges_unvalidated(2, true, [(0, 1)]).unwrap();
        assert_eq!(g.patch_dangling_with_self_loops(), vec![1]);
        assert!(g.validate().is_empty());
        assert_eq!(g.out_neighbors(1), &[1]);
    }

    #[test]
    fn connectivity() {
        let g = Graph::from_edges(4, false, [(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
        let g = Graph::from_edges(3, true, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(g.is_connected());
    }
}
