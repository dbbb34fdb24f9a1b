//! PageRank random-walk primitives and the visit-count estimator shared by
//! every algorithm.
//!
//! A PageRank walk stops at each step with probability epsilon and otherwise
//! moves to a uniformly chosen out-neighbor. With K walks started at every
//! node and zeta(v) the number of walk occurrences at v (starts included),
//! the estimate zeta(v) * epsilon / (n K) is unbiased for the stationary
//! probability of v.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("epsilon = {0} is not in (0, 1]")]
    Epsilon(f64),
    #[error("walk-count constant c = {0} must be positive")]
    WalkConstant(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("cannot step from a node without out-neighbors")]
    DanglingNode,
    #[error("length mismatch: {estimates} estimates vs {oracle} oracle entries")]
    LengthMismatch { estimates: usize, oracle: usize },
    #[error("oracle score of node {0} is not positive")]
    NonPositiveOracle(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Natural,
    #[default]
    Base2,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base2 => x.log2(),
        }
    }
}

/// `ceil` that ignores floating-point dust just above an integer.
pub(crate) fn ceil_count(x: f64) -> u64 {
    (x - 1e-9).ceil().max(0.0) as u64
}

/// K = ceil(c log n), never below one.
pub fn walks_per_node(n: usize, c: f64, log_base: LogBase) -> u64 {
    ceil_count(c * log_base.log(n as f64)).max(1)
}

/// Long-walk cap ell = ceil(log n / epsilon), never below one.
pub fn long_walk_cap(n: usize, epsilon: f64, log_base: LogBase) -> u32 {
    ceil_count(log_base.log(n as f64) / epsilon).max(1) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// Reset probability.
    pub epsilon: f64,
    /// Walk-count constant.
    pub c: f64,
    /// Walks started per node (K).
    pub walks_per_node: u64,
    /// Long-walk cap in steps (ell).
    pub ell: u32,
    pub log_base: LogBase,
}

impl WalkParams {
    /// Derives K and ell for an `n`-node graph.
    pub fn new(n: usize, epsilon: f64, c: f64, log_base: LogBase) -> Result<Self, WalkError> {
        check_epsilon(epsilon)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(WalkError::WalkConstant(c));
        }
        Ok(Self {
            epsilon,
            c,
            walks_per_node: walks_per_node(n, c, log_base),
            ell: long_walk_cap(n, epsilon, log_base),
            log_base,
        })
    }

    /// Defaults: c = 20, base-2 logarithms.
    pub fn with_defaults(n: usize, epsilon: f64) -> Result<Self, WalkError> {
        Self::new(n, epsilon, 20.0, LogBase::Base2)
    }

    /// Overrides K.
    pub fn with_walks(mut self, walks_per_node: u64) -> Result<Self, WalkError> {
        if walks_per_node == 0 {
            return Err(WalkError::Zero("walks per node"));
        }
        self.walks_per_node = walks_per_node;
        Ok(self)
    }

    /// Overrides ell.
    pub fn with_ell(mut self, ell: u32) -> Result<Self, WalkError> {
        if ell == 0 {
            return Err(WalkError::Zero("long-walk cap"));
        }
        self.ell = ell;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        check_epsilon(self.epsilon)?;
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(WalkError::WalkConstant(self.c));
        }
        if self.walks_per_node == 0 {
            return Err(WalkError::Zero("walks per node"));
        }
        if self.ell == 0 {
            return Err(WalkError::Zero("long-walk cap"));
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), WalkError> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(WalkError::Epsilon(epsilon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Terminate,
    MoveTo(NodeId),
}

/// One step of a PageRank walk: terminate with probability `epsilon`, else move
/// to a uniformly random out-neighbor.
pub fn step(rng: &mut impl Rng, epsilon: f64, out_neighbors: &[NodeId]) -> Result<Step, WalkError> {
    if out_neighbors.is_empty() {
        return Err(WalkError::DanglingNode);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(Step::Terminate);
    }
    Ok(Step::MoveTo(
        out_neighbors[rng.random_range(0..out_neighbors.len())],
    ))
}

/// Per-node visit counts and the PageRank estimates they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub zeta: Vec<u64>,
    pub estimates: Vec<f64>,
    pub n: usize,
    pub walks_per_node: u64,
    pub epsilon: f64,
}

impl ScoreVector {
    pub fn total_visits(&self) -> u64 {
        self.zeta.iter().sum()
    }
}

/// pi~(v) = zeta(v) * epsilon / (n K), with no further normalization.
pub fn estimate(zeta: Vec<u64>, n: usize, walks_per_node: u64, epsilon: f64) -> ScoreVector {
    let scale = epsilon / (n as f64 * walks_per_node as f64);
    let estimates = zeta.iter().map(|&z| z as f64 * scale).collect();
    ScoreVector {
        zeta,
        estimates,
        n,
        walks_per_node,
        epsilon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub max_rel: f64,
    pub mean_rel: f64,
    pub l1: f64,
    pub linf: f64,
}

/// Relative errors |est - pi| / pi per node, plus their max and mean and the
/// L1 / L-infinity norms of the absolute difference.
pub fn relative_errors(estimates: &[f64], oracle: &[f64]) -> Result<Vec<f64>, WalkError> {
    if estimates.len() != oracle.len() {
        return Err(WalkError::LengthMismatch {
            estimates: estimates.len(),
            oracle: oracle.len(),
        });
    }
    estimates
        .iter()
        .zip(oracle)
        .enumerate()
        .map(|(v, (&est, &pi))| {
            if pi > 0.0 {
                Ok((est - pi).abs() / pi)
            } else {
                Err(WalkError::NonPositiveOracle(v))
            }
        })
        .collect()
}

pub fn error_report(estimates: &[f64], oracle: &[f64]) -> Result<ErrorReport, WalkError> {
    let rel = relative_errors(estimates, oracle)?;
    let abs: Vec<f64> = estimates
        .iter()
        .zip(oracle)
        .map(|(e, p)| (e - p).abs())
        .collect();
    let n = rel.len().max(1) as f64;
    Ok(ErrorReport {
        max_rel: rel.iter().copied().fold(0.0, f64::max),
        mean_rel: rel.iter().sum::<f64>() / n,
        l1: abs.iter().sum(),
        linf: abs.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn step_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert_eq!(step(&mut rng, 1.0, &[3, 4]).unwrap(), Step::Terminate);
            assert_eq!(step(&mut rng, 0.0, &[7]).unwrap(), Step::MoveTo(7));
        }
        assert_eq!(step(&mut rng, 0.5, &[]), Err(WalkError::DanglingNode));
    }

    #[test]
    fn step_frequencies_within_three_sigma() {
        let draws = 1_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            match step(&mut rng, 0.2, &[1, 2]).unwrap() {
                Step::Terminate => counts[0] += 1,
                Step::MoveTo(1) => counts[1] += 1,
                Step::MoveTo(_) => counts[2] += 1,
            }
        }
        for (count, p) in counts.iter().zip([0.2, 0.4, 0.4]) {
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            let deviation = (*count as f64 - draws as f64 * p).abs();
            assert!(
                deviation <= 3.0 * sigma,
                "count {count} vs p {p}: {deviation} > 3 sigma {sigma}"
            );
        }
    }

    #[test]
    fn estimator_formula() {
        let s = estimate(vec![50; 10], 10, 10, 0.2);
        assert!(s.estimates.iter().all(|&e| close(e, 0.1)));
        let s = estimate(vec![0; 4], 4, 3, 0.5);
        assert!(s.estimates.iter().all(|&e| e == 0.0));
        let s = estimate(vec![10], 1, 5, 0.5);
        assert_eq!(s.estimates, vec![1.0]);
        assert_eq!(s.total_visits(), 10);
    }

    #[test]
    fn walk_counts() {
        assert_eq!(walks_per_node(1024, 20.0, LogBase::Base2), 200);
        assert_eq!(walks_per_node(2, 1.0, LogBase::Base2), 1);
        assert_eq!(walks_per_node(256, 2.5, LogBase::Base2), 20);
        assert_eq!(walks_per_node(100, 1.0, LogBase::Natural), 5);
        assert_eq!(walks_per_node(1, 20.0, LogBase::Base2), 1);
        assert_eq!(long_walk_cap(256, 0.2, LogBase::Base2), 40);
        assert_eq!(long_walk_cap(8, 0.25, LogBase::Base2), 12);
    }

    #[test]
    fn params_validation() {
        assert!(WalkParams::new(8, 0.0, 1.0, LogBase::Base2).is_err());
        assert!(WalkParams::new(8, 1.5, 1.0, LogBase::Base2).is_err());
        assert!(WalkParams::new(8, 0.5, 0.0, LogBase::Base2).is_err());
        let p = WalkParams::with_defaults(1024, 0.2).unwrap();
        assert_eq!((p.walks_per_node, p.ell), (200, 50));
        assert!(p.with_walks(0).is_err());
        assert_eq!(p.with_walks(7).unwrap().walks_per_node, 7);
        assert!(p.with_ell(0).is_err());
    }

    #[test]
    fn error_reports() {
        let oracle = [0.1, 0.2, 0.3, 0.4];
        let r = error_report(&oracle, &oracle).unwrap();
        assert_eq!((r.max_rel, r.mean_rel, r.l1, r.linf), (0.0, 0.0, 0.0, 0.0));

        let doubled: Vec<f64> = oracle.iter().map(|p| 2.0 * p).collect();
        let r = error_report(&doubled, &oracle).unwrap();
        assert!(close(r.max_rel, 1.0) && close(r.mean_rel, 1.0));

        let mut off = oracle;
        off[0] += 0.01;
        let r = error_report(&off, &oracle).unwrap();
        assert!(close(r.max_rel, 0.1));
        assert!(close(r.l1, 0.01));
        assert!(close(r.linf, 0.01));
        assert!(close(r.mean_rel, 0.1 / 4.0));

        assert_eq!(
            error_report(&[0.5], &[0.0]),
            Err(WalkError::NonPositiveOracle(0))
        );
        assert!(matches!(
            error_report(&[0.5], &[0.2, 0.8]),
            Err(WalkError::LengthMismatch { .. })
        ));
    }
}
