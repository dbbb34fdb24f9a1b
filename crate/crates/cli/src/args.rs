use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dpagerank::graph::GeneratorSpec;
use dpagerank::walk::LogBase;

#[derive(Debug, Parser)]
#[command(name = "dpagerank", version, about = "Simulate Monte Carlo distributed PageRank")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an algorithm or oracle and write scores and metrics.
    Run(RunArgs),
    /// Compare two score files, or one against its embedded oracle.
    Compare(CompareArgs),
    /// Sweep generators and parameters, one CSV row per configuration and seed.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Simple,
    Improved,
    DirectedLocal,
    OraclePower,
    OracleExact,
    OracleNaive,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Simple => "simple",
            Algo::Improved => "improved",
            Algo::DirectedLocal => "directed-local",
            Algo::OraclePower => "oracle-power",
            Algo::OracleExact => "oracle-exact",
            Algo::OracleNaive => "oracle-naive",
        }
    }

    pub fn is_exact_oracle(self) -> bool {
        matches!(self, Algo::OraclePower | Algo::OracleExact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    Natural,
    Base2,
}

impl From<LogBaseArg> for LogBase {
    fn from(arg: LogBaseArg) -> Self {
        match arg {
            LogBaseArg::Natural => LogBase::Natural,
            LogBaseArg::Base2 => LogBase::Base2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleChoice {
    /// Exact solve up to the dense cap, power iteration above it.
    Auto,
    Exact,
    Power,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatchMode {
    SelfLoop,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge-list file.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub graph: Option<PathBuf>,
    /// Generator spec kind:n[:param], e.g. ring:8, er:64:0.1, dcycle:3.
    #[arg(long)]
    pub gen: Option<GeneratorSpec>,
    /// Seed for random generators.
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
    /// Repair nodes without out-edges instead of rejecting the graph.
    #[arg(long, value_enum)]
    pub patch_dangling: Option<PatchMode>,
}

#[derive(Debug, Clone, Args)]
pub struct WalkArgs {
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Walk-count constant: K = ceil(c log n).
    #[arg(long, default_value_t = 20.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Base2)]
    pub log_base: LogBaseArg,
    /// Walks per node, overriding c.
    #[arg(long)]
    pub walks: Option<u64>,
    /// Long-walk cap in steps.
    #[arg(long)]
    pub ell: Option<u32>,
    /// Short-walk length for the stitching algorithms.
    #[arg(long)]
    pub lambda: Option<u32>,
    /// Coupons per unit degree for the undirected stitching algorithm.
    #[arg(long)]
    pub eta: Option<u64>,
    /// Scale factor on the per-node walk budget of the directed variant.
    #[arg(long, default_value_t = 1.0)]
    pub budget_scale: f64,
    /// Per-edge per-round bit budget for the congestion audit.
    #[arg(long)]
    pub congest_budget_bits: Option<u64>,
    /// Run node handlers on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Reference scores embedded in the output.
    #[arg(long, value_enum, default_value_t = OracleChoice::Auto)]
    pub oracle: OracleChoice,
    /// Output directory.
    #[arg(long, env = "DPAGERANK_OUT", default_value = "dpagerank-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Scores under test.
    pub a: PathBuf,
    /// Reference scores; defaults to the oracle embedded in A.
    pub b: Option<PathBuf>,
    /// Fail with exit code 3 if a metric exceeds its bound, e.g. max_rel=0.1.
    #[arg(long = "tolerance")]
    pub tolerances: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Generator specs to sweep; repeat the flag for several.
    #[arg(long = "gen")]
    pub gens: Vec<GeneratorSpec>,
    #[arg(long, value_enum, default_value_t = Algo::Simple)]
    pub algo: Algo,
    #[arg(long = "epsilon", default_values_t = vec![0.2])]
    pub epsilons: Vec<f64>,
    /// Short-walk lengths to sweep.
    #[arg(long = "lambda")]
    pub lambdas: Vec<u32>,
    /// Seeds per configuration.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Base seed; row seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
    #[arg(long, default_value_t = 20.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Base2)]
    pub log_base: LogBaseArg,
    #[arg(long)]
    pub walks: Option<u64>,
    #[arg(long)]
    pub eta: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub budget_scale: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
