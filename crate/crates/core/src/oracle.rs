//! Centralized ground truth.
//!
//! All routines use the row-vector convention: a distribution x evolves as
//! x <- x P with P = (epsilon / n) J + (1 - epsilon) Q, where Q is the
//! uniform out-neighbor transition matrix.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::walk::{self, ScoreVector, Step, WalkError};

/// Largest graph [`exact_solve`] accepts by default.
pub const EXACT_SOLVE_CAP: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("node {0} has no out-neighbors; the transition matrix is undefined there")]
    Dangling(NodeId),
    #[error("epsilon = {0} is not in (0, 1]")]
    Epsilon(f64),
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear system is singular")]
    Singular,
    #[error("{n} nodes exceeds the dense solver cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    PowerIteration,
    ExactSolve,
    NaiveMonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleScores {
    pub pi: Vec<f64>,
    pub method: OracleMethod,
    /// Final L1 change (power iteration) or L1 equation residual (exact solve).
    pub residual: Option<f64>,
    pub iterations: usize,
    /// L1 change per power-iteration step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
}

fn check_inputs(graph: &Graph, epsilon: f64) -> Result<(), OracleError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(OracleError::Epsilon(epsilon));
    }
    match (0..graph.node_count()).find(|&v| graph.out_degree(v) == 0) {
        Some(v) => Err(OracleError::Dangling(v)),
        None => Ok(()),
    }
}

/// One application of x <- x P.
fn apply_transition(graph: &Graph, epsilon: f64, x: &[f64], out: &mut [f64]) {
    let n = graph.node_count();
    let mass: f64 = x.iter().sum();
    out.fill(epsilon * mass / n as f64);
    for (u, &xu) in x.iter().enumerate() {
        let neighbors = graph.out_neighbors(u);
        let share = (1.0 - epsilon) * xu / neighbors.len() as f64;
        for &v in neighbors {
            out[v] += share;
        }
    }
}

pub fn power_iteration(
    graph: &Graph,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<OracleScores, OracleError> {
    check_inputs(graph, epsilon)?;
    let n = graph.node_count();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut history = Vec::new();
    for iteration in 1..=max_iter {
        apply_transition(graph, epsilon, &x, &mut next);
        let residual: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        history.push(residual);
        if residual < tol {
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|p| *p /= total);
            return Ok(OracleScores {
                pi: x,
                method: OracleMethod::PowerIteration,
                residual: Some(residual),
                iterations: iteration,
                residual_history: history,
            });
        }
    }
    Err(OracleError::NoConvergence {
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Dense solve of pi (I - (1 - epsilon) Q) = (epsilon / n) 1, capped at
/// [`EXACT_SOLVE_CAP`] nodes.
pub fn exact_solve(graph: &Graph, epsilon: f64) -> Result<OracleScores, OracleError> {
    exact_solve_capped(graph, epsilon, EXACT_SOLVE_CAP)
}

pub fn exact_solve_capped(
    graph: &Graph,
    epsilon: f64,
    cap: usize,
) -> Result<OracleScores, OracleError> {
    check_inputs(graph, epsilon)?;
    let n = graph.node_count();
    if n > cap {
        return Err(OracleError::TooLarge { n, cap });
    }
    // Transposed system: (I - (1 - eps) Q^T) pi^T = eps / n.
    let mut a = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        let neighbors = graph.out_neighbors(u);
        let w = (1.0 - epsilon) / neighbors.len() as f64;
        for &v in neighbors {
            a[(v, u)] -= w;
        }
    }
    let b = DVector::from_element(n, epsilon / n as f64);
    let solution = a.clone().lu().solve(&b).ok_or(OracleError::Singular)?;
    let residual = (&a * &solution - &b).abs().sum();
    let total = solution.sum();
    let pi: Vec<f64> = solution.iter().map(|p| p / total).collect();
    Ok(OracleScores {
        pi,
        method: OracleMethod::ExactSolve,
        residual: Some(residual),
        iterations: 1,
        residual_history: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveMcOptions {
    /// Count each walk's starting placement as a visit.
    pub count_starts: bool,
    /// Stop walks after this many moves.
    pub max_len: Option<u32>,
    pub keep_trajectories: bool,
}

impl Default for NaiveMcOptions {
    fn default() -> Self {
        Self {
            count_starts: true,
            max_len: None,
            keep_trajectories: true,
        }
    }
}

/// One walk of the centralized simulation, start node first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub source: NodeId,
    pub nodes: Vec<NodeId>,
    /// Stopped by `max_len` rather than by a reset.
    pub truncated: bool,
}

impl Trajectory {
    pub fn endpoint(&self) -> NodeId {
        *self.nodes.last().expect("trajectory contains its start")
    }
}

/// K walks from every node, run one after another from a single stream.
pub fn naive_monte_carlo(
    graph: &Graph,
    epsilon: f64,
    walks_per_node: u64,
    seed: u64,
    options: NaiveMcOptions,
) -> Result<(ScoreVector, Vec<Trajectory>), OracleError> {
    check_inputs(graph, epsilon)?;
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeta = vec![0u64; n];
    let mut log = Vec::new();
    for source in 0..n {
        for _ in 0..walks_per_node {
            let mut at = source;
            let mut nodes = vec![source];
            let mut moves = 0u32;
            let mut truncated = false;
            if options.count_starts {
                zeta[source] += 1;
            }
            loop {
                if options.max_len.is_some_and(|cap| moves >= cap) {
                    truncated = true;
                    break;
                }
                match walk::step(&mut rng, epsilon, graph.out_neighbors(at))? {
                    Step::Terminate => break,
                    Step::MoveTo(next) => {
                        at = next;
                        moves += 1;
                        zeta[at] += 1;
                        if options.keep_trajectories {
                            nodes.push(at);
                        }
                    }
                }
            }
            if options.keep_trajectories {
                log.push(Trajectory {
                    source,
                    nodes,
                    truncated,
                });
            }
        }
    }
    Ok((walk::estimate(zeta, n, walks_per_node, epsilon), log))
}

pub fn naive_oracle_scores(scores: &ScoreVector) -> OracleScores {
    OracleScores {
        pi: scores.estimates.clone(),
        method: OracleMethod::NaiveMonteCarlo,
        residual: None,
        iterations: 0,
        residual_history: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GeneratorKind};

    fn linf(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn directed_cycle_is_uniform() {
        let g = generate(GeneratorKind::DirectedCycle, 3, 0).unwrap();
        for eps in [0.1, 0.5, 0.9] {
            let p = power_iteration(&g, eps, 1e-14, 10_000).unwrap();
            assert!(linf(&p.pi, &[1.0 / 3.0; 3]) < 1e-12);
            let e = exact_solve(&g, eps).unwrap();
            assert!(linf(&e.pi, &[1.0 / 3.0; 3]) < 1e-12);
        }
    }

    #[test]
    fn single_self_loop() {
        let g = generate(GeneratorKind::DirectedCycle, 1, 0).unwrap();
        assert_eq!(power_iteration(&g, 0.2, 1e-12, 100).unwrap().pi, vec![1.0]);
        assert_eq!(exact_solve(&g, 0.2).unwrap().pi, vec![1.0]);
    }

    /// Undirected star, center 0: by symmetry every leaf has mass (1 - c)/(n - 1), and
    /// the center satisfies c = eps/n + (1 - eps)(1 - c), i.e.
    /// c = (eps/n + 1 - eps) / (2 - eps).
    #[test]
    fn star_matches_closed_form() {
        let eps = 0.2;
        let n = 4.0;
        let center = (eps / n + 1.0 - eps) / (2.0 - eps);
        let leaf = (1.0 - center) / (n - 1.0);
        let g = generate(GeneratorKind::Star, 4, 0).unwrap();
        let exact = exact_solve(&g, eps).unwrap();
        let power = power_iteration(&g, eps, 1e-14, 10_000).unwrap();
        let expected = [center, leaf, leaf, leaf];
        assert!(linf(&exact.pi, &expected) < 1e-12);
        assert!(linf(&power.pi, &exact.pi) < 1e-10);
    }

    #[test]
    fn two_node_path_is_even() {
        let g = Graph::from_edges(2, false, [(0, 1)]).unwrap();
        for eps in [0.05, 0.3, 0.99] {
            assert!(linf(&exact_solve(&g, eps).unwrap().pi, &[0.5, 0.5]) < 1e-12);
        }
    }

    #[test]
    fn cross_oracle_agreement_on_random_graphs() {
        for seed in 0..20 {
            let directed = seed % 2 == 0;
            let g = if directed {
                generate(GeneratorKind::DirectedRandom { p: 0.15 }, 30, seed).unwrap()
            } else {
                generate(GeneratorKind::ErdosRenyi { p: 0.15 }, 30, seed).unwrap()
            };
            let power = power_iteration(&g, 0.2, 1e-12, 10_000).unwrap();
            let exact = exact_solve(&g, 0.2).unwrap();
            assert!(linf(&power.pi, &exact.pi) <= 1e-9, "seed {seed}");
            for scores in [&power, &exact] {
                assert!((scores.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(scores.pi.iter().all(|&p| p >= 0.2 / 30.0 - 1e-15));
            }
        }
    }

    #[test]
    fn power_residuals_contract() {
        let g = generate(GeneratorKind::ErdosRenyi { p: 0.1 }, 50, 3).unwrap();
        let eps = 0.15;
        let p = power_iteration(&g, eps, 1e-13, 10_000).unwrap();
        for w in p.residual_history.windows(2) {
            assert!(w[1] <= (1.0 - eps) * w[0] + 1e-12);
        }
    }

    #[test]
    fn regular_graphs_are_uniform_and_degree_correlates() {
        let ring = generate(GeneratorKind::Ring, 9, 0).unwrap();
        assert!(linf(&exact_solve(&ring, 0.3).unwrap().pi, &[1.0 / 9.0; 9]) < 1e-12);
        let complete = generate(GeneratorKind::Complete, 6, 0).unwrap();
        assert!(linf(&exact_solve(&complete, 0.3).unwrap().pi, &[1.0 / 6.0; 6]) < 1e-12);

        let g = generate(GeneratorKind::ErdosRenyi { p: 0.1 }, 80, 5).unwrap();
        let pi = exact_solve(&g, 0.2).unwrap().pi;
        let deg: Vec<f64> = (0..80).map(|v| g.degree(v) as f64).collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let (mp, md) = (mean(&pi), mean(&deg));
        let cov: f64 = pi.iter().zip(&deg).map(|(p, d)| (p - mp) * (d - md)).sum();
        assert!(cov > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let sink = Graph::from_edges_unvalidated(2, true, [(0, 1)]).unwrap();
        assert_eq!(
            power_iteration(&sink, 0.2, 1e-9, 10).unwrap_err(),
            OracleError::Dangling(1)
        );
        let ring = generate(GeneratorKind::Ring, 5, 0).unwrap();
        assert_eq!(
            exact_solve(&ring, 0.0).unwrap_err(),
            OracleError::Epsilon(0.0)
        );
        assert_eq!(
            exact_solve_capped(&ring, 0.2, 4).unwrap_err(),
            OracleError::TooLarge { n: 5, cap: 4 }
        );
        assert!(matches!(
            power_iteration(&ring, 0.2, 0.0, 5),
            Err(OracleError::NoConvergence { iterations: 5, .. })
        ));
    }

    #[test]
    fn naive_with_certain_reset_counts_only_starts() {
        let g = generate(GeneratorKind::ErdosRenyi { p: 0.4 }, 10, 1).unwrap();
        let (scores, log) = naive_monte_carlo(&g, 1.0, 7, 3, NaiveMcOptions::default()).unwrap();
        assert_eq!(scores.zeta, vec![7; 10]);
        assert!(scores.estimates.iter().all(|&e| (e - 0.1).abs() < 1e-15));
        assert!(log.iter().all(|t| t.nodes == vec![t.source]));
    }

    #[test]
    fn naive_on_two_node_path() {
        let g = Graph::from_edges(2, false, [(0, 1)]).unwrap();
        let k = 20_000;
        let (scores, _) = naive_monte_carlo(&g, 0.2, k, 9, NaiveMcOptions::default()).unwrap();
        // Each visit lands on node 0 with probability close to 1/2; the walk
        // alternates, so the counts are strongly paired and 1% is generous.
        for e in &scores.estimates {
            assert!((e - 0.5).abs() < 0.01, "{e}");
        }
    }

    #[test]
    fn naive_visits_match_trajectories() {
        let g = generate(GeneratorKind::Grid, 9, 0).unwrap();
        let cap = NaiveMcOptions {
            max_len: Some(4),
            ..NaiveMcOptions::default()
        };
        let (scores, log) = naive_monte_carlo(&g, 0.3, 50, 4, cap).unwrap();
        let mut counted = vec![0u64; 9];
        for t in &log {
            assert!(t.nodes.len() <= 5);
            assert!(!t.truncated || t.nodes.len() == 5);
            for w in t.nodes.windows(2) {
                assert!(g.has_edge(w[0], w[1]));
            }
            for &v in &t.nodes {
                counted[v] += 1;
            }
        }
        assert_eq!(counted, scores.zeta);
        assert!(log.iter().any(|t| t.truncated));
    }
}
