use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use dpagerank::graph::GeneratorSpec;
use dpagerank::sim::derive_seed;
use dpagerank::stitch::{PHASE_REVERSE, PHASE_SHORT_WALKS, PHASE_STITCH};
use dpagerank::walk::{error_report, relative_errors, ErrorReport};

use crate::args::{Algo, BenchArgs, CompareArgs, RunArgs};
use crate::artifacts::{
    read_scores, write_atomic, write_json, Aggregate, GraphInfo, MetricsFile, NodeScore, ScoresFile,
};
use crate::error::CliError;
use crate::exec::{execute, load_graph, reference, Execution, Settings};

/// Paths written by one `run` invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scores: Vec<PathBuf>,
    pub metrics: Vec<PathBuf>,
    pub aggregate: Option<PathBuf>,
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport, CliError> {
    if args.repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let loaded = load_graph(&args.graph)?;
    let graph = &loaded.graph;
    let w = &args.walk;
    let settings = Settings {
        algo: args.algo,
        epsilon: w.epsilon,
        c: w.c,
        log_base: w.log_base.into(),
        walks: w.walks,
        ell: w.ell,
        lambda: w.lambda,
        eta: w.eta,
        budget_scale: w.budget_scale,
        congest_budget_bits: w.congest_budget_bits,
        parallel: w.parallel,
    };
    settings.check(graph)?;
    let oracle = if args.algo.is_exact_oracle() {
        None
    } else {
        reference(graph, w.epsilon, args.oracle)?
    };
    let info = GraphInfo {
        source: loaded.source.clone(),
        n: graph.node_count(),
        directed: graph.is_directed(),
        edges: graph.edge_count(),
    };

    let seeds: Vec<u64> = (0..args.repeats)
        .map(|i| if args.repeats == 1 { args.seed } else { derive_seed(args.seed, i as u64) })
        .collect();
    let executions: Vec<Execution> = seeds
        .par_iter()
        .map(|&seed| execute(graph, &settings, seed))
        .collect::<Result<_, _>>()?;

    let single = args.repeats == 1;
    let name = |stem: &str, ext: &str, i: usize| -> PathBuf {
        if single {
            args.out.join(format!("{stem}.{ext}"))
        } else {
            args.out.join(format!("{stem}-{i}.{ext}"))
        }
    };
    let mut report = RunReport { scores: Vec::new(), metrics: Vec::new(), aggregate: None };
    let mut errors = Vec::new();
    for (i, (exec, &seed)) in executions.iter().zip(&seeds).enumerate() {
        let scores = scores_file(args.algo, &info, w.epsilon, seed, i, exec, oracle.as_ref().map(|o| &o.pi))?;
        errors.extend(scores.errors);
        let scores_path = name("scores", "json", i);
        write_json(&scores_path, &scores)?;
        report.scores.push(scores_path);

        let metrics_path = name("metrics", "json", i);
        write_json(&metrics_path, &metrics_file(args.algo, seed, i, exec))?;
        let mut csv = Vec::new();
        if let Some(m) = &exec.metrics {
            m.write_csv(&mut csv)?;
        } else {
            writeln!(csv, "round,src,dst,channel,bits")?;
        }
        write_atomic(&name("metrics", "csv", i), &csv)?;
        report.metrics.push(metrics_path);
    }
    if !single {
        let aggregate = Aggregate::new(args.algo, errors, executions.iter().map(Execution::rounds).collect());
        let path = args.out.join("aggregate.json");
        write_json(&path, &aggregate)?;
        report.aggregate = Some(path);
    }
    Ok(report)
}

fn scores_file(
    algo: Algo,
    info: &GraphInfo,
    epsilon: f64,
    seed: u64,
    repeat: usize,
    exec: &Execution,
    oracle: Option<&Vec<f64>>,
) -> Result<ScoresFile, CliError> {
    let rel = oracle
        .map(|pi| relative_errors(&exec.estimates, pi))
        .transpose()
        .map_err(|e| CliError::Run(e.into()))?;
    let errors = oracle
        .map(|pi| error_report(&exec.estimates, pi))
        .transpose()
        .map_err(|e| CliError::Run(e.into()))?;
    let nodes = exec
        .estimates
        .iter()
        .enumerate()
        .map(|(id, &estimate)| NodeScore {
            id,
            zeta: exec.zeta.as_ref().map(|z| z[id]),
            estimate,
            oracle: oracle.map(|pi| pi[id]),
            rel_error: rel.as_ref().map(|r| r[id]),
        })
        .collect();
    let oracle_method = match algo {
        Algo::OraclePower => Some(dpagerank::oracle::OracleMethod::PowerIteration),
        Algo::OracleExact => Some(dpagerank::oracle::OracleMethod::ExactSolve),
        _ => None,
    };
    Ok(ScoresFile {
        algo,
        graph: info.clone(),
        epsilon,
        walks_per_node: exec.walks_per_node,
        seed,
        repeat,
        total_visits: exec.zeta.as_ref().map(|z| z.iter().sum()),
        oracle_method,
        errors,
        nodes,
    })
}

fn metrics_file(algo: Algo, seed: u64, repeat: usize, exec: &Execution) -> MetricsFile {
    MetricsFile {
        algo,
        seed,
        repeat,
        totals: exec.metrics.as_ref().map(|m| m.summary()),
        congest_budget_bits: exec.congest.map(|c| c.0),
        congestion_violations: exec.congest.map(|c| c.1),
        exhaustions: exec.stitch.as_ref().map_or(0, |s| s.exhaustions),
        truncations: exec.stitch.as_ref().map_or(0, |s| s.truncations),
        phases: exec.phases.clone(),
        stitch: exec.stitch.clone(),
        oracle: exec.oracle.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub metric: ToleranceMetric,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceMetric {
    MaxRel,
    MeanRel,
    L1,
    Linf,
}

impl ToleranceMetric {
    pub fn name(self) -> &'static str {
        match self {
            ToleranceMetric::MaxRel => "max_rel",
            ToleranceMetric::MeanRel => "mean_rel",
            ToleranceMetric::L1 => "l1",
            ToleranceMetric::Linf => "linf",
        }
    }

    fn of(self, r: &ErrorReport) -> f64 {
        match self {
            ToleranceMetric::MaxRel => r.max_rel,
            ToleranceMetric::MeanRel => r.mean_rel,
            ToleranceMetric::L1 => r.l1,
            ToleranceMetric::Linf => r.linf,
        }
    }
}

pub fn parse_tolerance(s: &str) -> Result<Tolerance, CliError> {
    let bad = || CliError::Config(format!("tolerance `{s}` is not metric=value with metric in max_rel, mean_rel, l1, linf"));
    let (name, value) = s.split_once('=').ok_or_else(bad)?;
    let metric = match name.trim() {
        "max_rel" => ToleranceMetric::MaxRel,
        "mean_rel" => ToleranceMetric::MeanRel,
        "l1" => ToleranceMetric::L1,
        "linf" => ToleranceMetric::Linf,
        _ => return Err(bad()),
    };
    let bound: f64 = value.trim().parse().map_err(|_| bad())?;
    if bound.is_nan() || bound < 0.0 {
        return Err(bad());
    }
    Ok(Tolerance { metric, bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub id: usize,
    pub value: f64,
    pub reference: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub a: String,
    pub reference: String,
    pub errors: ErrorReport,
    pub nodes: Vec<CompareRow>,
}

/// Builds the report; tolerance violations come back as `CliError::Tolerance`
/// together with the report so the caller can still print it.
pub fn cmd_compare(args: &CompareArgs) -> Result<(CompareReport, Option<CliError>), CliError> {
    let tolerances: Vec<Tolerance> = args.tolerances.iter().map(|t| parse_tolerance(t)).collect::<Result<_, _>>()?;
    let a = read_scores(&args.a)?;
    let (reference, label) = match &args.b {
        Some(path) => {
            let b = read_scores(path)?;
            if a.ids() != b.ids() {
                return Err(CliError::Config(format!(
                    "node sets differ: {} has {} nodes, {} has {}",
                    args.a.display(),
                    a.nodes.len(),
                    path.display(),
                    b.nodes.len()
                )));
            }
            (b.estimates(), path.display().to_string())
        }
        None => {
            let pi: Option<Vec<f64>> = a.nodes.iter().map(|s| s.oracle).collect();
            let pi = pi.ok_or_else(|| {
                CliError::Config(format!("{} embeds no oracle scores; pass a second file", args.a.display()))
            })?;
            (pi, "embedded oracle".to_string())
        }
    };
    let estimates = a.estimates();
    let errors = error_report(&estimates, &reference).map_err(|e| CliError::Config(e.to_string()))?;
    let rel = relative_errors(&estimates, &reference).map_err(|e| CliError::Config(e.to_string()))?;
    let nodes = a
        .nodes
        .iter()
        .zip(&reference)
        .zip(&rel)
        .map(|((s, &r), &e)| CompareRow { id: s.id, value: s.estimate, reference: r, rel_error: e })
        .collect();
    let violated: Vec<String> = tolerances
        .iter()
        .filter(|t| t.metric.of(&errors) > t.bound)
        .map(|t| format!("{} = {} exceeds {}", t.metric.name(), t.metric.of(&errors), t.bound))
        .collect();
    let report = CompareReport { a: args.a.display().to_string(), reference: label, errors, nodes };
    let failure = (!violated.is_empty()).then(|| CliError::Tolerance(violated.join("; ")));
    Ok((report, failure))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub spec: String,
    pub algo: &'static str,
    pub n: usize,
    pub epsilon: f64,
    pub lambda: Option<u32>,
    pub seed: u64,
    pub rounds: Option<u64>,
    pub max_edge_bits: Option<u64>,
    pub phase1_rounds: Option<u64>,
    pub phase2_rounds: Option<u64>,
    pub phase3_rounds: Option<u64>,
    pub exhaustions: Option<u64>,
    pub wall_ms: f64,
    pub error: String,
}

pub const BENCH_HEADER: [&str; 14] = [
    "spec",
    "algo",
    "n",
    "epsilon",
    "lambda",
    "seed",
    "rounds",
    "max_edge_bits",
    "phase1_rounds",
    "phase2_rounds",
    "phase3_rounds",
    "exhaustions",
    "wall_ms",
    "error",
];

struct BenchJob {
    spec: GeneratorSpec,
    epsilon: f64,
    lambda: Option<u32>,
    seed: u64,
}

pub fn bench_rows(args: &BenchArgs) -> Vec<BenchRow> {
    let lambdas: Vec<Option<u32>> = if args.lambdas.is_empty() {
        vec![None]
    } else {
        args.lambdas.iter().copied().map(Some).collect()
    };
    let mut jobs = Vec::new();
    for &spec in &args.gens {
        for &epsilon in &args.epsilons {
            for &lambda in &lambdas {
                for i in 0..args.seeds {
                    jobs.push(BenchJob { spec, epsilon, lambda, seed: derive_seed(args.seed, i) });
                }
            }
        }
    }
    jobs.par_iter().map(|job| bench_row(args, job)).collect()
}

fn bench_row(args: &BenchArgs, job: &BenchJob) -> BenchRow {
    let mut row = BenchRow {
        spec: job.spec.to_string(),
        algo: args.algo.name(),
        n: job.spec.n,
        epsilon: job.epsilon,
        lambda: job.lambda,
        seed: job.seed,
        rounds: None,
        max_edge_bits: None,
        phase1_rounds: None,
        phase2_rounds: None,
        phase3_rounds: None,
        exhaustions: None,
        wall_ms: 0.0,
        error: String::new(),
    };
    let settings = Settings {
        algo: args.algo,
        epsilon: job.epsilon,
        c: args.c,
        log_base: args.log_base.into(),
        walks: args.walks,
        ell: None,
        lambda: job.lambda,
        eta: args.eta,
        budget_scale: args.budget_scale,
        congest_budget_bits: None,
        parallel: false,
    };
    let start = Instant::now();
    let result = job
        .spec
        .generate(args.graph_seed)
        .map_err(CliError::from)
        .and_then(|g| settings.check(&g).map(|()| g))
        .and_then(|g| execute(&g, &settings, job.seed));
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(exec) => {
            row.rounds = Some(exec.rounds());
            row.max_edge_bits = exec.metrics.as_ref().map(|m| m.max_edge_bits_per_round);
            row.phase1_rounds = exec.phase_rounds(PHASE_SHORT_WALKS);
            row.phase2_rounds = exec.phase_rounds(PHASE_STITCH);
            row.phase3_rounds = exec.phase_rounds(PHASE_REVERSE);
            row.exhaustions = exec.stitch.as_ref().map(|s| s.exhaustions);
            if let Some(s) = &exec.stitch {
                row.lambda = Some(s.lambda);
            }
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(BENCH_HEADER).map_err(io)?;
    for row in rows {
        writer.serialize(row).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let rows = bench_rows(args);
    match &args.out {
        Some(path) => {
            let mut bytes = Vec::new();
            write_bench_csv(&rows, &mut bytes)?;
            write_atomic(path, &bytes)?;
        }
        None => write_bench_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(rows)
}

/// Reads every score file of a `run` invocation, in repeat order.
pub fn read_run(report: &RunReport) -> Result<Vec<ScoresFile>, CliError> {
    report.scores.iter().map(|p| read_scores(Path::new(p))).collect()
}
