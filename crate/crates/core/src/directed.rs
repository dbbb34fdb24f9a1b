//! Stitching on directed graphs without a bandwidth limit.
//!
//! Every node creates the same number R of short walks, enough that no
//! connector can run dry when `R >= n K ceil(ell / lambda)`. The phases are
//! those of [`crate::stitch`]; reverse tracing crosses edges against their
//! direction, so it uses the direct channel. Edge bits are recorded but no
//! budget applies.

use serde::Serialize;

use crate::graph::Graph;
use crate::run::{AlgoError, RunOptions};
use crate::stitch::{self, CouponBudget, StitchOutcome, StitchParams};
use crate::walk::{self, WalkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalBudget {
    /// Short walks created at every node (R).
    pub walks_per_node: u64,
    pub lambda: u32,
}

impl LocalBudget {
    /// R = ceil(c n log^2 n / epsilon) and lambda = ceil(sqrt(log n / epsilon)).
    pub fn for_graph(n: usize, walk: &WalkParams) -> Self {
        let log_n = walk.log_base.log(n as f64).max(0.0);
        Self {
            walks_per_node: walk::ceil_count(walk.c * n as f64 * log_n * log_n / walk.epsilon)
                .max(1),
            lambda: walk::ceil_count((log_n / walk.epsilon).sqrt()).max(1) as u32,
        }
    }

    /// Multiplies R by `factor`, keeping at least one walk per node.
    pub fn scaled(mut self, factor: f64) -> Result<Self, AlgoError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(AlgoError::InvalidParams(format!(
                "budget scale {factor} must be positive"
            )));
        }
        self.walks_per_node = walk::ceil_count(self.walks_per_node as f64 * factor).max(1);
        Ok(self)
    }

    pub fn with_walks(mut self, walks_per_node: u64) -> Self {
        self.walks_per_node = walks_per_node;
        self
    }

    pub fn with_lambda(mut self, lambda: u32) -> Self {
        self.lambda = lambda;
        self
    }
}

pub fn run_directed_local(
    graph: &Graph,
    walk: &WalkParams,
    budget: LocalBudget,
    options: &RunOptions,
) -> Result<StitchOutcome, AlgoError> {
    if !graph.is_directed() {
        return Err(AlgoError::Unsupported(
            "the LOCAL variant expects a directed graph".into(),
        ));
    }
    let params = StitchParams {
        walk: *walk,
        lambda: budget.lambda,
        budget: CouponBudget::PerNode(budget.walks_per_node),
    };
    stitch::run_phases(graph, &params, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GeneratorKind};
    use crate::oracle::power_iteration;
    use crate::stitch::{PHASE_REVERSE, PHASE_SHORT_WALKS};
    use crate::walk::error_report;

    fn walk_params(n: usize, epsilon: f64, k: u64) -> WalkParams {
        WalkParams::with_defaults(n, epsilon)
            .unwrap()
            .with_walks(k)
            .unwrap()
    }

    #[test]
    fn default_budget_sizes() {
        let p = WalkParams::with_defaults(64, 0.2).unwrap();
        let b = LocalBudget::for_graph(64, &p);
        assert_eq!(b.lambda, 6);
        assert_eq!(b.walks_per_node, 230_400);
        assert!(b.walks_per_node >= p.walks_per_node * u64::from(p.ell.div_ceil(b.lambda)));
        assert_eq!(b.scaled(0.01).unwrap().walks_per_node, 2304);
        assert!(b.scaled(0.0).is_err());
    }

    #[test]
    fn symmetric_digraphs_are_uniform() {
        let pair = Graph::from_edges(2, true, [(0, 1), (1, 0)]).unwrap();
        let cycle = generate(GeneratorKind::DirectedCycle, 3, 0).unwrap();
        for (g, epsilon) in [(pair, 0.2), (cycle, 0.3)] {
            let n = g.node_count();
            // Lift the cap so truncation at tiny n does not bias the check.
            let walk = walk_params(n, epsilon, 5000).with_ell(80).unwrap();
            let budget = LocalBudget::for_graph(n, &walk).with_walks(3000);
            let out = run_directed_local(&g, &walk, budget, &RunOptions::seeded(2)).unwrap();
            for e in &out.scores.estimates {
                let target = 1.0 / n as f64;
                assert!((e - target).abs() < 0.05 * target, "{e}");
            }
        }
    }

    #[test]
    fn random_digraph_matches_power_iteration() {
        let g = generate(GeneratorKind::DirectedRandom { p: 0.15 }, 32, 3).unwrap();
        let walk = walk_params(32, 0.2, 2000);
        let budget = LocalBudget::for_graph(32, &walk).with_walks(3000);
        let out = run_directed_local(&g, &walk, budget, &RunOptions::seeded(1)).unwrap();
        let truth = power_iteration(&g, 0.2, 1e-12, 10_000).unwrap();
        let report = error_report(&out.scores.estimates, &truth.pi).unwrap();
        assert!(report.mean_rel <= 0.1, "{report:?}");
    }

    #[test]
    fn schedule_and_channels() {
        let g = generate(GeneratorKind::DirectedRandom { p: 0.2 }, 16, 5).unwrap();
        let walk = WalkParams::with_defaults(16, 0.2).unwrap();
        let budget = LocalBudget::for_graph(16, &walk);
        for seed in 0..3 {
            let out = run_directed_local(&g, &walk, budget, &RunOptions::seeded(seed)).unwrap();
            assert_eq!(
                out.phase(PHASE_SHORT_WALKS).unwrap().rounds_elapsed,
                u64::from(budget.lambda) + 2
            );
            assert_eq!(out.stats.exhaustions, 0);
            let reverse = out.phase(PHASE_REVERSE).unwrap();
            assert_eq!(reverse.edge_message_count, 0);
            assert!(reverse.direct_message_count > 0);
            for w in &out.connectors.walks {
                let t = w.trajectory(&out.table).unwrap();
                assert!(t.windows(2).all(|p| g.has_edge(p[0], p[1])));
            }
        }
    }

    #[test]
    fn undirected_graphs_are_rejected() {
        let g = generate(GeneratorKind::Ring, 4, 0).unwrap();
        let walk = WalkParams::with_defaults(4, 0.2).unwrap();
        let budget = LocalBudget::for_graph(4, &walk);
        assert!(matches!(
            run_directed_local(&g, &walk, budget, &RunOptions::default()),
            Err(AlgoError::Unsupported(_))
        ));
    }
}
