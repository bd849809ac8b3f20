//! End-to-end checks of the command layer: bundle contents, simulation
//! reports, benchmark determinism, and the binary's exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use minpoly_cli::bench;
use minpoly_cli::bundle;
use minpoly_cli::commands::{self, Z0Source};
use minpoly_cli::config::RunConfig;
use minpoly_cli::formats::{GraphFile, LedgerFile, MessageLine, PlanFile};

use minpoly_core::graph::Graph;

const BIN: &str = env!("CARGO_BIN_EXE_minpoly");

fn write_graph(path: &Path, g: &Graph) {
    let text = serde_json::to_string(&GraphFile::from_graph(g)).unwrap();
    fs::write(path, text).unwrap();
}

fn optimize_into(dir: &Path, g: &Graph) -> minpoly_core::minpoly::AlgorithmState {
    let graph_path = dir.join("graph.json");
    write_graph(&graph_path, g);
    let cfg = RunConfig { out: Some(dir.join("bundle")), ..RunConfig::default() };
    let mut sink = Vec::new();
    commands::cmd_optimize(&graph_path, &cfg, &mut sink).unwrap()
}

#[test]
fn optimize_writes_complete_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Graph::star(8).unwrap();
    let state = optimize_into(tmp.path(), &g);
    assert_eq!(state.final_order(), 3);

    let dir = tmp.path().join("bundle");
    for path in bundle::artifact_paths(&dir) {
        assert!(path.is_file(), "missing artifact {}", path.display());
    }

    let ledger: LedgerFile =
        serde_json::from_str(&fs::read_to_string(dir.join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger.xi, ledger.entries.len());
    assert!(ledger.entries.iter().any(|e| e.value.abs() < 1e-9));

    let plan: PlanFile =
        serde_json::from_str(&fs::read_to_string(dir.join("plan.json")).unwrap()).unwrap();
    let (pg, cp) = plan.to_plan().unwrap();
    assert_eq!(pg, g);
    assert_eq!(cp.s, 3);

    let history = fs::read_to_string(dir.join("history.csv")).unwrap();
    assert!(history.starts_with("k,step,spectrum,order"));
    assert!(history.lines().last().unwrap().contains("Terminated"));
}

#[test]
fn simulate_hits_the_mean_in_s_minus_one_rounds() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Graph::star(8).unwrap();
    optimize_into(tmp.path(), &g);
    let plan_path = tmp.path().join("bundle").join("plan.json");
    let log_path = tmp.path().join("msgs.jsonl");

    let mut sink = Vec::new();
    let report = commands::cmd_simulate(
        &plan_path,
        &Z0Source::Random { seed: 7 },
        None,
        Some(&log_path),
        &mut sink,
    )
    .unwrap();
    assert_eq!(report.rounds, 2);
    assert!(report.max_deviation <= 1e-6, "deviation {}", report.max_deviation);

    let log = fs::read_to_string(&log_path).unwrap();
    let messages: Vec<MessageLine> =
        log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(messages.len(), report.rounds * 2 * g.edge_count());
    assert!(messages.iter().all(|m| m.round >= 1 && m.round <= report.rounds));
}

#[test]
fn truncated_rounds_break_consensus() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Graph::star(8).unwrap();
    optimize_into(tmp.path(), &g);
    let plan_path = tmp.path().join("bundle").join("plan.json");

    let mut sink = Vec::new();
    let report = commands::cmd_simulate(
        &plan_path,
        &Z0Source::Random { seed: 7 },
        Some(1),
        None,
        &mut sink,
    )
    .unwrap();
    assert_eq!(report.rounds, 1);
    assert!(report.max_deviation > 1e-3, "deviation {}", report.max_deviation);
}

#[test]
fn equal_initial_values_stay_put() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Graph::complete(5).unwrap();
    optimize_into(tmp.path(), &g);
    let plan_path = tmp.path().join("bundle").join("plan.json");
    let z0_path = tmp.path().join("z0.json");
    fs::write(&z0_path, "[2.5, 2.5, 2.5, 2.5, 2.5]").unwrap();

    let mut sink = Vec::new();
    let report = commands::cmd_simulate(
        &plan_path,
        &Z0Source::File(&z0_path),
        None,
        None,
        &mut sink,
    )
    .unwrap();
    // A constant vector is an eigenvector of P, so the only deviation left
    // is roundoff in the ε products.
    assert!(report.max_deviation <= 1e-12, "deviation {}", report.max_deviation);
    assert_eq!(report.mean, 2.5);
}

#[test]
fn z0_length_mismatch_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Graph::complete(5).unwrap();
    optimize_into(tmp.path(), &g);
    let plan_path = tmp.path().join("bundle").join("plan.json");
    let z0_path = tmp.path().join("z0.json");
    fs::write(&z0_path, "[1.0, 2.0]").unwrap();

    let mut sink = Vec::new();
    let err = commands::cmd_simulate(&plan_path, &Z0Source::File(&z0_path), None, None, &mut sink)
        .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn bench_records_dominate_and_rerun_identically() {
    let cfg = RunConfig { seed: 5, ..RunConfig::default() };
    let first = bench::bench_trials(10, 0.4, 3, cfg.seed, 1, &cfg);
    let second = bench::bench_trials(10, 0.4, 3, cfg.seed, 1, &cfg);
    assert_eq!(first.len(), 3);
    for (a, b) in first.iter().zip(&second) {
        assert!(a.record.s_optimized <= a.record.s_standard);
        assert_eq!(a.record.seed, b.record.seed);
        assert_eq!(a.record.s_standard, b.record.s_standard);
        assert_eq!(a.record.s_optimized, b.record.s_optimized);
        assert_eq!(a.record.iterations, b.record.iterations);
    }

    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    let records_a: Vec<_> = first.iter().map(|o| o.record.clone()).collect();
    let records_b: Vec<_> = second.iter().map(|o| o.record.clone()).collect();
    bench::write_records_csv(&mut csv_a, &records_a).unwrap();
    bench::write_records_csv(&mut csv_b, &records_b).unwrap();
    let strip = |bytes: &[u8]| {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&csv_a), strip(&csv_b));
}

#[test]
fn malformed_json_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("broken.json");
    fs::write(&path, "{\"n\": 4, \"edges\": [[0,").unwrap();
    let out = Command::new(BIN)
        .args(["optimize", path.to_str().unwrap()])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot parse"));
}

#[test]
fn disconnected_graph_exits_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("split.json");
    write_graph(&path, &Graph::new(4, [(0, 1), (2, 3)]).unwrap());
    let out = Command::new(BIN)
        .args(["optimize", path.to_str().unwrap()])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));
}

#[test]
fn binary_chains_optimize_into_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let graph_path = tmp.path().join("k8.json");
    write_graph(&graph_path, &Graph::complete(8).unwrap());
    let out_dir = tmp.path().join("k8_out");

    let opt = Command::new(BIN)
        .args(["optimize", graph_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(opt.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&opt.stderr));
    assert!(String::from_utf8_lossy(&opt.stdout).contains("final order 2"));

    let plan = out_dir.join("plan.json");
    let sim = Command::new(BIN)
        .args(["simulate", plan.to_str().unwrap(), "--random", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(sim.status.code(), Some(0));
    let text = String::from_utf8_lossy(&sim.stdout).to_string();
    assert!(text.contains("rounds run: 1"), "stdout: {text}");
}
