use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use dpagerank_cli::artifacts::read_scores;

fn dpagerank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpagerank"))
        .args(args)
        .env_remove("DPAGERANK_OUT")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = dpagerank(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_record(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simple_run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["run", "--algo", "simple", "--gen", "ring:8", "--epsilon", "0.2", "--seed", "1", "--out", s(&out)]);
    for f in ["scores.json", "metrics.json", "metrics.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let scores = read_scores(&out.join("scores.json")).unwrap();
    let zeta: u64 = scores.nodes.iter().map(|n| n.zeta.unwrap()).sum();
    assert_eq!(Some(zeta), scores.total_visits);
    let k = scores.walks_per_node.unwrap();
    assert!(zeta >= 8 * k);
    for node in &scores.nodes {
        let expected = node.zeta.unwrap() as f64 * 0.2 / (8 * k) as f64;
        assert!((node.estimate - expected).abs() < 1e-15);
        assert!(node.oracle.is_some() && node.rel_error.is_some());
    }
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["congestion_violations"], 0);
    assert!(metrics["rounds"].as_u64().unwrap() > 0);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("round,src,dst,channel,bits\n"));
}

#[test]
fn repeats_write_one_file_each_plus_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.edges");
    std::fs::write(&edges, "undirected 6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n0 3\n").unwrap();
    let out = dir.path().join("o");
    run_ok(&["run", "--algo", "improved", "--graph", s(&edges), "--epsilon", "0.2", "--repeats", "5", "--out", s(&out)]);
    for i in 0..5 {
        assert!(out.join(format!("scores-{i}.json")).is_file());
        assert!(out.join(format!("metrics-{i}.json")).is_file());
    }
    let seeds: std::collections::BTreeSet<u64> =
        (0..5).map(|i| read_scores(&out.join(format!("scores-{i}.json"))).unwrap().seed).collect();
    assert_eq!(seeds.len(), 5);
    let aggregate = json(&out.join("aggregate.json"));
    assert_eq!(aggregate["repeats"], 5);
    assert_eq!(aggregate["errors"].as_array().unwrap().len(), 5);
    assert!(aggregate["mean_rel_avg"].as_f64().unwrap() >= 0.0);
    assert!(aggregate["max_rel_worst"].as_f64().unwrap() >= aggregate["max_rel_avg"].as_f64().unwrap());
}

#[test]
fn exact_oracle_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "--algo", "oracle-exact", "--gen", "star:4", "--epsilon", "0.2", "--out", s(dir.path())]);
    let scores = read_scores(&dir.path().join("scores.json")).unwrap();
    let total: f64 = scores.estimates().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(scores.nodes.iter().all(|n| n.oracle.is_none()));
}

#[test]
fn output_directory_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_dpagerank"))
        .args(["run", "--algo", "oracle-power", "--gen", "ring:4"])
        .env("DPAGERANK_OUT", &target)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(target.join("scores.json").is_file());
}

#[test]
fn compare_identical_files_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "--algo", "simple", "--gen", "ring:8", "--out", s(dir.path())]);
    let a = dir.path().join("scores.json");
    let out = run_ok(&["compare", s(&a), s(&a), "--tolerance", "max_rel=0"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["max_rel", "mean_rel", "l1", "linf"] {
        assert_eq!(report["errors"][key], 0.0, "{key}");
    }
    assert_eq!(report["nodes"].as_array().unwrap().len(), 8);
}

#[test]
fn simple_matches_exact_on_directed_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["run", "--algo", "simple", "--gen", "dcycle:3", "--walks", "5000", "--seed", "9", "--out", s(&a)]);
    run_ok(&["run", "--algo", "oracle-exact", "--gen", "dcycle:3", "--out", s(&b)]);
    run_ok(&["compare", s(&a.join("scores.json")), s(&b.join("scores.json")), "--tolerance", "max_rel=0.1"]);
}

#[test]
fn compare_defaults_to_embedded_oracle_and_flags_violations() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "--algo", "simple", "--gen", "er:16:0.3", "--walks", "2", "--out", s(dir.path())]);
    let a = dir.path().join("scores.json");
    let out = run_ok(&["compare", s(&a)]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["reference"], "embedded oracle");
    let out = dpagerank(&["compare", s(&a), "--tolerance", "mean_rel=0.000001"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"], "tolerance");
    // The report still goes to stdout.
    assert!(serde_json::from_slice::<Value>(&out.stdout).is_ok());
}

#[test]
fn compare_rejects_mismatched_node_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["run", "--algo", "oracle-exact", "--gen", "ring:8", "--out", s(&a)]);
    run_ok(&["run", "--algo", "oracle-exact", "--gen", "ring:9", "--out", s(&b)]);
    let out = dpagerank(&["compare", s(&a.join("scores.json")), s(&b.join("scores.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"], "config");
}

#[test]
fn oracle_free_scores_need_a_second_file() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "--algo", "simple", "--gen", "ring:8", "--oracle", "none", "--out", s(dir.path())]);
    let out = dpagerank(&["compare", s(&dir.path().join("scores.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scores_round_trip_without_loss() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["run", "--algo", "improved", "--gen", "er:24:0.3", "--out", s(dir.path())]);
    let path = dir.path().join("scores.json");
    let bytes = std::fs::read(&path).unwrap();
    let parsed = read_scores(&path).unwrap();
    let mut again = serde_json::to_vec_pretty(&parsed).unwrap();
    again.push(b'\n');
    assert_eq!(bytes, again);
    let out = run_ok(&["compare", s(&path)]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for (row, node) in report["nodes"].as_array().unwrap().iter().zip(&parsed.nodes) {
        assert_eq!(row["value"].as_f64().unwrap(), node.estimate);
        assert_eq!(row["reference"].as_f64().unwrap(), node.oracle.unwrap());
    }
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let o = s(dir.path());
    let cases: [(&[&str], i32, &str); 5] = [
        (&["run", "--algo", "improved", "--gen", "dcycle:4", "--out", o], 1, "config"),
        (&["run", "--algo", "directed-local", "--gen", "ring:4", "--out", o], 1, "config"),
        (&["run", "--algo", "simple", "--gen", "ring:8", "--epsilon", "1.5", "--out", o], 1, "config"),
        (&["run", "--algo", "simple", "--gen", "nope:8", "--out", o], 1, "config"),
        (&["run", "--algo", "oracle-exact", "--gen", "ring:2001", "--oracle", "none", "--out", o], 2, "run"),
    ];
    for (args, code, kind) in cases {
        let out = dpagerank(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let record = error_record(&out);
        assert_eq!(record["error"], kind, "{args:?}");
        assert_eq!(record["exit_code"], code);
    }
}

#[test]
fn dangling_nodes_are_rejected_unless_patched() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("d.edges");
    std::fs::write(&edges, "directed 2\n0 1\n").unwrap();
    let out = dpagerank(&["run", "--algo", "oracle-power", "--graph", s(&edges), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"], "graph");
    run_ok(&[
        "run", "--algo", "oracle-power", "--graph", s(&edges), "--patch-dangling", "self-loop", "--out", s(dir.path()),
    ]);
}

fn bench_csv(args: &[&str]) -> (Vec<String>, Vec<csv::StringRecord>) {
    let out = run_ok(args);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    (header, reader.records().map(Result::unwrap).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { (v[m - 1] + v[m]) / 2.0 } else { v[m] }
}

#[test]
fn empty_sweep_prints_header_only() {
    let out = run_ok(&["bench"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("spec,algo,n,epsilon,lambda,seed,rounds,max_edge_bits,"));
}

#[test]
fn simple_rounds_grow_logarithmically() {
    let (header, rows) = bench_csv(&[
        "bench", "--algo", "simple", "--gen", "ring:64", "--gen", "ring:256", "--gen", "ring:1024", "--seeds", "10",
    ]);
    assert_eq!(rows.len(), 30);
    let (n, rounds, error) = (column(&header, "n"), column(&header, "rounds"), column(&header, "error"));
    assert!(rows.iter().all(|r| r[error].is_empty()));
    let med = |size: &str| median(rows.iter().filter(|r| &r[n] == size).map(|r| r[rounds].parse().unwrap()).collect());
    let ratio = med("1024") / med("64");
    assert!(ratio > 1.0 && ratio <= 2.5, "median ratio {ratio}");
}

#[test]
fn stitch_rounds_halve_as_lambda_doubles() {
    let (header, rows) = bench_csv(&[
        "bench", "--algo", "improved", "--gen", "ring:256", "--lambda", "2", "--lambda", "4", "--lambda", "8",
        "--eta", "1000", "--seeds", "2",
    ]);
    assert_eq!(rows.len(), 6);
    let (lambda, p2) = (column(&header, "lambda"), column(&header, "phase2_rounds"));
    let rounds = |l: &str| -> Vec<f64> { rows.iter().filter(|r| &r[lambda] == l).map(|r| r[p2].parse().unwrap()).collect() };
    for (small, large) in [("2", "4"), ("4", "8")] {
        for (a, b) in rounds(small).iter().zip(rounds(large)) {
            assert!((a / 2.0 - b).abs() <= 1.0, "lambda {small} -> {large}: {a} vs {b}");
        }
    }
}

#[test]
fn bench_rows_record_errors_and_continue() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("bench.csv");
    run_ok(&["bench", "--algo", "improved", "--gen", "dcycle:8", "--gen", "ring:8", "--seeds", "1", "--out", s(&path)]);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0][13].is_empty());
    assert!(rows[1][13].is_empty());
}

#[test]
fn bench_is_deterministic_apart_from_wall_time() {
    let args = ["bench", "--algo", "simple", "--gen", "er:32:0.2", "--epsilon", "0.2", "--epsilon", "0.3", "--seeds", "3"];
    let strip = |rows: Vec<csv::StringRecord>| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != 12).map(|(_, f)| f.to_string()).collect()).collect()
    };
    let (_, a) = bench_csv(&args);
    let (_, b) = bench_csv(&args);
    assert_eq!(a.len(), 6);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn help_exits_cleanly() {
    assert!(dpagerank(&["--help"]).status.success());
    let out = dpagerank(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"], "config");
}
