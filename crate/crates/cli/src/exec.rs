//! Graph loading and algorithm dispatch shared by `run` and `bench`.

use std::fs::File;
use std::io::BufReader;

use dpagerank::directed::{run_directed_local, LocalBudget};
use dpagerank::graph::{load_edge_list, LoadOptions};
use dpagerank::oracle::{
    exact_solve, naive_monte_carlo, power_iteration, NaiveMcOptions, OracleScores, EXACT_SOLVE_CAP,
};
use dpagerank::run::PhaseSummary;
use dpagerank::sim::{audit_congestion, RoundMetrics};
use dpagerank::simple::{congest_budget, run_simple};
use dpagerank::stitch::{run_improved, StitchOutcome, StitchParams, StitchStats};
use dpagerank::walk::LogBase;
use dpagerank::{Graph, RunOptions, WalkParams};

use crate::args::{Algo, GraphArgs, OracleChoice};
use crate::artifacts::OracleRun;
use crate::error::CliError;

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;

#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// File path or generator spec, as given.
    pub source: String,
}

pub fn load_graph(args: &GraphArgs) -> Result<LoadedGraph, CliError> {
    let options = LoadOptions { patch_dangling: args.patch_dangling.is_some() };
    match (&args.graph, &args.gen) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let graph = load_edge_list(BufReader::new(file), options)?;
            Ok(LoadedGraph { graph, source: path.display().to_string() })
        }
        (None, Some(spec)) => {
            let mut graph = spec.generate(args.graph_seed)?;
            if options.patch_dangling {
                graph.patch_dangling_with_self_loops();
            }
            Ok(LoadedGraph { graph, source: spec.to_string() })
        }
        (None, None) => Err(CliError::Config("one of --graph or --gen is required".into())),
    }
}

/// Everything an algorithm run depends on besides the graph and seed.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub algo: Algo,
    pub epsilon: f64,
    pub c: f64,
    pub log_base: LogBase,
    pub walks: Option<u64>,
    pub ell: Option<u32>,
    pub lambda: Option<u32>,
    pub eta: Option<u64>,
    pub budget_scale: f64,
    pub congest_budget_bits: Option<u64>,
    pub parallel: bool,
}

impl Settings {
    pub fn walk_params(&self, n: usize) -> Result<WalkParams, CliError> {
        let mut p = WalkParams::new(n, self.epsilon, self.c, self.log_base).map_err(config)?;
        if let Some(k) = self.walks {
            p = p.with_walks(k).map_err(config)?;
        }
        if let Some(ell) = self.ell {
            p = p.with_ell(ell).map_err(config)?;
        }
        Ok(p)
    }

    /// Rejects combinations that cannot run, before any work starts.
    pub fn check(&self, graph: &Graph) -> Result<(), CliError> {
        self.walk_params(graph.node_count())?;
        match self.algo {
            Algo::Improved if graph.is_directed() => {
                Err(CliError::Config("--algo improved requires an undirected graph".into()))
            }
            Algo::DirectedLocal if !graph.is_directed() => {
                Err(CliError::Config("--algo directed-local requires a directed graph".into()))
            }
            _ if !(self.budget_scale > 0.0 && self.budget_scale.is_finite()) => {
                Err(CliError::Config(format!("--budget-scale {} must be positive", self.budget_scale)))
            }
            _ if self.lambda == Some(0) => Err(CliError::Config("--lambda must be at least 1".into())),
            _ if self.eta == Some(0) => Err(CliError::Config("--eta must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Default)]
pub struct Execution {
    pub walks_per_node: Option<u64>,
    pub zeta: Option<Vec<u64>>,
    pub estimates: Vec<f64>,
    pub metrics: Option<RoundMetrics>,
    pub phases: Vec<PhaseSummary>,
    pub stitch: Option<StitchStats>,
    pub congest: Option<(u64, usize)>,
    pub oracle: Option<OracleRun>,
}

impl Execution {
    fn from_stitch(out: StitchOutcome, congest_budget_bits: Option<u64>) -> Self {
        let congest = congest_budget_bits.map(|b| (b, audit_congestion(&out.metrics, b).len()));
        Self {
            walks_per_node: Some(out.scores.walks_per_node),
            zeta: Some(out.scores.zeta),
            estimates: out.scores.estimates,
            phases: out.phases.iter().map(|p| p.summary()).collect(),
            metrics: Some(out.metrics),
            stitch: Some(out.stats),
            congest,
            oracle: None,
        }
    }

    fn from_oracle(scores: OracleScores) -> Self {
        Self {
            oracle: Some(OracleRun { iterations: scores.iterations, residual: scores.residual }),
            estimates: scores.pi,
            ..Self::default()
        }
    }

    pub fn rounds(&self) -> u64 {
        self.metrics.as_ref().map_or(0, |m| m.rounds_elapsed)
    }

    pub fn phase_rounds(&self, name: &str) -> Option<u64> {
        self.phases.iter().find(|p| p.name == name).map(|p| p.summary.rounds)
    }
}

pub fn execute(graph: &Graph, settings: &Settings, seed: u64) -> Result<Execution, CliError> {
    let n = graph.node_count();
    let walk = settings.walk_params(n)?;
    let options = RunOptions { seed, parallel: settings.parallel, ..RunOptions::default() };
    let execution = match settings.algo {
        Algo::Simple => {
            let out = run_simple(graph, &walk, &options)?;
            let budget = settings
                .congest_budget_bits
                .unwrap_or_else(|| congest_budget(n, walk.walks_per_node));
            let violations = audit_congestion(&out.metrics, budget).len();
            Execution {
                walks_per_node: Some(walk.walks_per_node),
                zeta: Some(out.scores.zeta),
                estimates: out.scores.estimates,
                metrics: Some(out.metrics),
                congest: Some((budget, violations)),
                ..Execution::default()
            }
        }
        Algo::Improved => {
            let mut params = StitchParams::undirected(n, walk);
            if let Some(lambda) = settings.lambda {
                params = params.with_lambda(lambda);
            }
            if let Some(eta) = settings.eta {
                params = params.with_eta(eta);
            }
            Execution::from_stitch(run_improved(graph, &params, &options)?, settings.congest_budget_bits)
        }
        Algo::DirectedLocal => {
            let mut budget = LocalBudget::for_graph(n, &walk).scaled(settings.budget_scale)?;
            if let Some(lambda) = settings.lambda {
                budget = budget.with_lambda(lambda);
            }
            Execution::from_stitch(run_directed_local(graph, &walk, budget, &options)?, None)
        }
        Algo::OraclePower => {
            Execution::from_oracle(power_iteration(graph, settings.epsilon, POWER_TOL, POWER_MAX_ITER).map_err(run_err)?)
        }
        Algo::OracleExact => Execution::from_oracle(exact_solve(graph, settings.epsilon).map_err(run_err)?),
        Algo::OracleNaive => {
            let options = NaiveMcOptions { keep_trajectories: false, ..NaiveMcOptions::default() };
            let (scores, _) =
                naive_monte_carlo(graph, settings.epsilon, walk.walks_per_node, seed, options).map_err(run_err)?;
            Execution {
                walks_per_node: Some(walk.walks_per_node),
                zeta: Some(scores.zeta),
                estimates: scores.estimates,
                ..Execution::default()
            }
        }
    };
    Ok(execution)
}

fn run_err(e: impl Into<dpagerank::AlgoError>) -> CliError {
    CliError::Run(e.into())
}

/// Reference scores for error reporting, or `None` when not requested.
pub fn reference(graph: &Graph, epsilon: f64, choice: OracleChoice) -> Result<Option<OracleScores>, CliError> {
    let exact = || exact_solve(graph, epsilon).map_err(run_err);
    let power = || power_iteration(graph, epsilon, POWER_TOL, POWER_MAX_ITER).map_err(run_err);
    Ok(match choice {
        OracleChoice::None => None,
        OracleChoice::Exact => Some(exact()?),
        OracleChoice::Power => Some(power()?),
        OracleChoice::Auto if graph.node_count() <= EXACT_SOLVE_CAP => Some(exact()?),
        OracleChoice::Auto => Some(power()?),
    })
}
