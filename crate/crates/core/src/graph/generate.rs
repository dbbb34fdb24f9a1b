//! Deterministic graph fixtures, addressed by `kind:n[:param]` spec strings.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, NodeId};

const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    Ring,
    Complete,
    /// Node 0 is the center.
    Star,
    /// Rows are the largest divisor of n not exceeding sqrt(n).
    Grid,
    ErdosRenyi {
        p: f64,
    },
    DirectedCycle,
    /// Directed G(n, p), resampled until every node has an out-edge.
    DirectedRandom {
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize) -> Self {
        Self { kind, n }
    }

    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        generate(self.kind, self.n, seed)
    }
}

impl FromStr for GeneratorSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| GraphError::InvalidParameters(format!("`{s}`: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad("expected kind:n[:param]"));
        }
        let n: usize = parts[1].parse().map_err(|_| bad("n is not an integer"))?;
        let param = |name: &str| -> Result<f64, GraphError> {
            parts
                .get(2)
                .ok_or_else(|| bad(&format!("missing {name}")))?
                .parse()
                .map_err(|_| bad(&format!("{name} is not a number")))
        };
        let kind = match parts[0] {
            "ring" => GeneratorKind::Ring,
            "complete" => GeneratorKind::Complete,
            "star" => GeneratorKind::Star,
            "grid" => GeneratorKind::Grid,
            "er" | "erdos-renyi" => GeneratorKind::ErdosRenyi { p: param("p")? },
            "dcycle" | "directed-cycle" => GeneratorKind::DirectedCycle,
            "digraph" | "directed-random" => GeneratorKind::DirectedRandom { p: param("p")? },
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        let takes_param = matches!(
            kind,
            GeneratorKind::ErdosRenyi { .. } | GeneratorKind::DirectedRandom { .. }
        );
        if !takes_param && parts.len() == 3 {
            return Err(bad("this kind takes no parameter"));
        }
        Ok(Self { kind, n })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        match self.kind {
            GeneratorKind::Ring => write!(f, "ring:{n}"),
            GeneratorKind::Complete => write!(f, "complete:{n}"),
            GeneratorKind::Star => write!(f, "star:{n}"),
            GeneratorKind::Grid => write!(f, "grid:{n}"),
            GeneratorKind::ErdosRenyi { p } => write!(f, "er:{n}:{p}"),
            GeneratorKind::DirectedCycle => write!(f, "dcycle:{n}"),
            GeneratorKind::DirectedRandom { p } => write!(f, "digraph:{n}:{p}"),
        }
    }
}

/// Pure function of `(kind, n, seed)`.
pub fn generate(kind: GeneratorKind, n: usize, seed: u64) -> Result<Graph, GraphError> {
    let need = |min: usize| {
        if n < min {
            Err(GraphError::InvalidParameters(format!(
                "n = {n} is below the minimum {min}"
            )))
        } else {
            Ok(())
        }
    };
    let probability = |p: f64| {
        if p > 0.0 && p <= 1.0 {
            Ok(())
        } else {
            Err(GraphError::InvalidParameters(format!(
                "p = {p} not in (0, 1]"
            )))
        }
    };
    match kind {
        GeneratorKind::Ring => {
            need(3)?;
            Graph::from_edges(n, false, (0..n).map(|v| (v, (v + 1) % n)))
        }
        GeneratorKind::Complete => {
            need(2)?;
            Graph::from_edges(
                n,
                false,
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))),
            )
        }
        GeneratorKind::Star => {
            need(2)?;
            Graph::from_edges(n, false, (1..n).map(|v| (0, v)))
        }
        GeneratorKind::Grid => {
            need(2)?;
            let rows = (1..=n)
                .take_while(|r| r * r <= n)
                .filter(|r| n.is_multiple_of(*r))
                .last()
                .unwrap_or(1);
            let cols = n / rows;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let v = r * cols + c;
                    if c + 1 < cols {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < rows {
                        edges.push((v, v + cols));
                    }
                }
            }
            Graph::from_edges(n, false, edges)
        }
        GeneratorKind::DirectedCycle => {
            need(1)?;
            Graph::from_edges(n, true, (0..n).map(|v| (v, (v + 1) % n)))
        }
        GeneratorKind::ErdosRenyi { p } => {
            need(2)?;
            probability(p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..MAX_ATTEMPTS {
                let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
                let graph = Graph::from_edges_unvalidated(n, false, edges)?;
                if graph.is_connected() && graph.validate().is_empty() {
                    return Ok(graph);
                }
            }
            Err(GraphError::Unconnected(MAX_ATTEMPTS))
        }
        GeneratorKind::DirectedRandom { p } => {
            need(2)?;
            probability(p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..MAX_ATTEMPTS {
                let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
                for u in 0..n {
                    for v in 0..n {
                        if u != v && rng.random::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
                let graph = Graph::from_edges_unvalidated(n, true, edges)?;
                if graph.is_connected() && graph.validate().is_empty() {
                    return Ok(graph);
                }
            }
            Err(GraphError::Unconnected(MAX_ATTEMPTS))
        }
    }
}
