//! JSON artifacts and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dpagerank::oracle::OracleMethod;
use dpagerank::run::PhaseSummary;
use dpagerank::sim::MetricsSummary;
use dpagerank::stitch::StitchStats;
use dpagerank::walk::ErrorReport;

use crate::args::Algo;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub source: String,
    pub n: usize,
    pub directed: bool,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<u64>,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresFile {
    pub algo: Algo,
    pub graph: GraphInfo,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walks_per_node: Option<u64>,
    pub seed: u64,
    pub repeat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_visits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_method: Option<OracleMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorReport>,
    pub nodes: Vec<NodeScore>,
}

impl ScoresFile {
    pub fn estimates(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.estimate).collect()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.nodes.iter().map(|s| s.id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRun {
    pub iterations: usize,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsFile {
    pub algo: Algo,
    pub seed: u64,
    pub repeat: usize,
    #[serde(flatten)]
    pub totals: Option<MetricsSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congest_budget_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congestion_violations: Option<usize>,
    pub exhaustions: u64,
    pub truncations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stitch: Option<StitchStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub algo: Algo,
    pub repeats: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<ErrorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rel_avg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_avg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_worst: Option<f64>,
    pub rounds: Vec<u64>,
}

impl Aggregate {
    pub fn new(algo: Algo, errors: Vec<ErrorReport>, rounds: Vec<u64>) -> Self {
        let reps = errors.len() as f64;
        let avg = |f: fn(&ErrorReport) -> f64| (!errors.is_empty()).then(|| errors.iter().map(f).sum::<f64>() / reps);
        Self {
            algo,
            repeats: rounds.len(),
            mean_rel_avg: avg(|e| e.mean_rel),
            max_rel_avg: avg(|e| e.max_rel),
            max_rel_worst: errors.iter().map(|e| e.max_rel).reduce(f64::max),
            errors,
            rounds,
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_scores(path: &Path) -> Result<ScoresFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
