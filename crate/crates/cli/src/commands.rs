//! Command implementations behind the thin argument-parsing layer, written
//! against `io::Write` sinks so tests can capture output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use minpoly_core::consensus::{self, ConsensusPlan, Message};
use minpoly_core::graph::Graph;
use minpoly_core::laplacian;
use minpoly_core::minpoly::{self, AlgorithmState};
use minpoly_core::spectral;

use crate::bench::{self, TrialOutcome};
use crate::bundle;
use crate::config::RunConfig;
use crate::formats::{GraphFile, MessageLine, PlanFile};

/// Failures split by who has to fix them: bad inputs exit with 2, runtime
/// failures with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let text = read_input(path)?;
    let file: GraphFile = parse_json(path, &text)?;
    file.to_graph()
        .map_err(|e| CliError::Input(format!("invalid graph in {}: {e}", path.display())))
}

/// Runs the weight search on the graph in `graph_path` and writes the
/// result bundle under `cfg.out`. Prints a one-line summary per pass plus
/// the final order.
pub fn cmd_optimize(
    graph_path: &Path,
    cfg: &RunConfig,
    mut out: impl Write,
) -> Result<AlgorithmState, CliError> {
    let g = load_graph(graph_path)?;
    let state = minpoly::minimize_minimal_polynomial(&g, &cfg.to_core()).map_err(|e| {
        CliError::Input(format!("cannot optimize {}: {e}", graph_path.display()))
    })?;
    let weights =
        laplacian::weights_from_laplacian(&g, state.laplacian(), laplacian::DEFAULT_PROPERTY_TOL)
            .map_err(runtime)?;
    let plan = consensus::build_plan(
        &g,
        state.laplacian(),
        spectral::SPECTRAL_RESOLUTION,
        laplacian::DEFAULT_PROPERTY_TOL,
    )
    .map_err(runtime)?;

    let dir = cfg.out.clone().unwrap_or_else(|| "out".into());
    bundle::write_bundle(&dir, &state, &weights, &plan).map_err(runtime)?;

    for row in state.history() {
        writeln!(out, "pass {:>2}  {:<18}  order {}", row.k, row.step.to_string(), row.order)
            .map_err(runtime)?;
    }
    writeln!(
        out,
        "final order {} (standard {}), {} distinct confirmed, consensus in {} rounds",
        state.final_order(),
        state.history().first().map(|r| r.order).unwrap_or(0),
        state.xi(),
        plan.s.saturating_sub(1),
    )
    .map_err(runtime)?;
    writeln!(out, "bundle written to {}", dir.display()).map_err(runtime)?;
    Ok(state)
}

/// Initial node values for `simulate`: either a JSON array from a file or
/// seeded uniform draws on [-5, 5).
pub enum Z0Source<'a> {
    File(&'a Path),
    Random { seed: u64 },
}

fn load_z0(source: &Z0Source, n: usize) -> Result<DVector<f64>, CliError> {
    match source {
        Z0Source::File(path) => {
            let text = read_input(path)?;
            let values: Vec<f64> = parse_json(path, &text)?;
            if values.len() != n {
                return Err(CliError::Input(format!(
                    "{} holds {} values but the plan's graph has {} nodes",
                    path.display(),
                    values.len(),
                    n
                )));
            }
            Ok(DVector::from_vec(values))
        }
        Z0Source::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let dist = Uniform::new(-5.0, 5.0);
            Ok(DVector::from_fn(n, |_, _| rng.sample(dist)))
        }
    }
}

fn write_message_log(path: &Path, log: &[Message]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    for m in log {
        let line = MessageLine { round: m.round, from: m.from, to: m.to, value: m.value };
        serde_json::to_writer(&mut w, &line).map_err(runtime)?;
        writeln!(w).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

/// Report printed by `simulate`, also returned for tests.
#[derive(Debug)]
pub struct SimulateReport {
    pub rounds: usize,
    pub mean: f64,
    pub max_deviation: f64,
    pub outputs: DVector<f64>,
}

/// Loads a plan, runs the per-node protocol for `rounds` (default `s - 1`)
/// synchronous rounds, prints each node's output and the worst deviation
/// from the true mean, and optionally dumps every message as JSONL.
pub fn cmd_simulate(
    plan_path: &Path,
    z0_source: &Z0Source,
    rounds: Option<usize>,
    log_path: Option<&Path>,
    mut out: impl Write,
) -> Result<SimulateReport, CliError> {
    let text = read_input(plan_path)?;
    let file: PlanFile = parse_json(plan_path, &text)?;
    let (g, plan): (Graph, ConsensusPlan) = file
        .to_plan()
        .map_err(|e| CliError::Input(format!("invalid plan in {}: {e}", plan_path.display())))?;

    let z0 = load_z0(z0_source, g.n())?;
    let rounds = rounds.unwrap_or_else(|| plan.s.saturating_sub(1));
    let (outputs, log) = consensus::simulate_rounds(&g, &plan, &z0, rounds)
        .map_err(|e| CliError::Input(format!("plan rejected: {e}")))?;

    if let Some(path) = log_path {
        write_message_log(path, &log)?;
    }

    let mean = z0.iter().sum::<f64>() / z0.len() as f64;
    let max_deviation =
        outputs.iter().map(|v| (v - mean).abs()).fold(0.0_f64, f64::max);
    writeln!(out, "rounds run: {rounds} (plan needs {})", plan.s.saturating_sub(1))
        .map_err(runtime)?;
    for (i, v) in outputs.iter().enumerate() {
        writeln!(out, "node {i:>3}: {v:.12}").map_err(runtime)?;
    }
    writeln!(out, "mean(z0) = {mean:.12}").map_err(runtime)?;
    writeln!(out, "max deviation = {max_deviation:.3e}").map_err(runtime)?;
    if let Some(path) = log_path {
        writeln!(out, "message log written to {} ({} messages)", path.display(), log.len())
            .map_err(runtime)?;
    }
    Ok(SimulateReport { rounds, mean, max_deviation, outputs })
}

/// Runs the sweep and emits records as CSV (to `csv_path` if given, else to
/// `out`) followed by a mean/stddev summary.
pub fn cmd_bench(
    n: usize,
    threshold: f64,
    trials: usize,
    jobs: usize,
    csv_path: Option<&Path>,
    cfg: &RunConfig,
    mut out: impl Write,
) -> Result<Vec<TrialOutcome>, CliError> {
    if trials < 1 {
        return Err(CliError::Input("bench needs at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Input(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let outcomes = bench::bench_trials(n, threshold, trials, cfg.seed, jobs, cfg);
    let records: Vec<_> = outcomes.iter().map(|o| o.record.clone()).collect();

    match csv_path {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", path.display()))
            })?;
            bench::write_records_csv(BufWriter::new(file), &records).map_err(runtime)?;
        }
        None => bench::write_records_csv(&mut out, &records).map_err(runtime)?,
    }

    let summary = bench::summarize(&outcomes);
    writeln!(
        out,
        "n={n} threshold={threshold} trials={} redraws={}",
        summary.trials, summary.redraws
    )
    .map_err(runtime)?;
    writeln!(
        out,
        "  s standard : mean {:.2}  std {:.2}",
        summary.standard_mean, summary.standard_std
    )
    .map_err(runtime)?;
    writeln!(
        out,
        "  s optimized: mean {:.2}  std {:.2}",
        summary.optimized_mean, summary.optimized_std
    )
    .map_err(runtime)?;
    if let Some(path) = csv_path {
        writeln!(out, "records written to {}", path.display()).map_err(runtime)?;
    }
    Ok(outcomes)
}
