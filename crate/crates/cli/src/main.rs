use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use minpoly_cli::commands::{self, Z0Source};
use minpoly_cli::config::RunConfig;

/// Laplacian weight design for finite-time average consensus.
#[derive(Parser)]
#[command(name = "minpoly", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

/// Tolerance knobs; defaults are the benchmark settings.
#[derive(Args)]
struct TolArgs {
    /// Eigenvalue floor enforced on the shifted matrix.
    #[arg(long = "eps-m", default_value_t = 0.01)]
    eps_m: f64,
    /// Trust ball radius for the G factor correction.
    #[arg(long = "eps-g", default_value_t = 0.01)]
    eps_g: f64,
    /// Trust ball radius for the F factor correction.
    #[arg(long = "eps-f", default_value_t = 0.01)]
    eps_f: f64,
    /// Factorization residual scale certifying a correction.
    #[arg(long = "eps-c", default_value_t = 1e-7)]
    eps_c: f64,
    /// Radius for detecting bunched eigenvalues.
    #[arg(long = "eps-mu", default_value_t = 0.01)]
    eps_mu: f64,
    /// Correction rounds allowed per candidate.
    #[arg(long = "eta-max", default_value_t = 50)]
    eta_max: usize,
    /// Splitting solver iteration cap.
    #[arg(long = "max-iters", default_value_t = 20_000)]
    max_iters: usize,
}

impl TolArgs {
    fn into_config(self, seed: u64, out: Option<PathBuf>) -> RunConfig {
        RunConfig {
            eps_m: self.eps_m,
            eps_g: self.eps_g,
            eps_f: self.eps_f,
            eps_c: self.eps_c,
            eps_mu: self.eps_mu,
            eta_max: self.eta_max,
            max_iters: self.max_iters,
            seed,
            out,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Search for edge weights minimizing the Laplacian's distinct
    /// eigenvalue count and write the result bundle.
    Optimize {
        /// Graph JSON: {"n": N, "edges": [[i, j], ...]}.
        graph: PathBuf,
        /// Bundle output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Run the per-node consensus protocol from a plan file.
    Simulate {
        /// Plan JSON produced by `optimize` (plan.json in the bundle).
        plan: PathBuf,
        /// Initial values as a JSON array, one entry per node.
        #[arg(long, conflicts_with = "random")]
        z0: Option<PathBuf>,
        /// Draw initial values uniformly from [-5, 5) instead.
        #[arg(long)]
        random: bool,
        /// Seed for --random.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the round count (default: the plan's s - 1).
        #[arg(long)]
        rounds: Option<usize>,
        /// Write every message as JSONL to this path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Benchmark sweep over seeded random graphs.
    Bench {
        /// Vertex count.
        #[arg(long)]
        n: usize,
        /// Generator threshold; edge probability is 1 - threshold.
        #[arg(long)]
        threshold: f64,
        /// Connected graphs per sweep.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Base seed for graph generation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Concurrent trials.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write per-trial records here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
}

fn run(cli: Cli) -> Result<(), commands::CliError> {
    let stdout = io::stdout().lock();
    match cli.cmd {
        Command::Optimize { graph, out, tol } => {
            let cfg = tol.into_config(0, Some(out));
            commands::cmd_optimize(&graph, &cfg, stdout).map(|_| ())
        }
        Command::Simulate { plan, z0, random, seed, rounds, log } => {
            let source = match (&z0, random) {
                (Some(path), _) => Z0Source::File(path),
                (None, true) => Z0Source::Random { seed },
                (None, false) => {
                    return Err(commands::CliError::Input(
                        "provide --z0 FILE or --random".into(),
                    ));
                }
            };
            commands::cmd_simulate(&plan, &source, rounds, log.as_deref(), stdout)
                .map(|_| ())
        }
        Command::Bench { n, threshold, trials, seed, jobs, csv, tol } => {
            let cfg = tol.into_config(seed, None);
            commands::cmd_bench(n, threshold, trials, jobs, csv.as_deref(), &cfg, stdout)
                .map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
