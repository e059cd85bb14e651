//! `hedonic`: batch front end for PAC stabilization of hedonic graph games.
//!
//! Exit codes: 0 ok, 1 usage or malformed input, 2 domain error (not a
//! forest, not a (3,B2) formula, no consistent forest), 3 capacity limit or
//! search timeout.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "hedonic",
    version,
    about = "PAC stabilization toolkit for hedonic graph games"
)]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file (a directory for `counterexample`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stabilize a game on a known forest from labeled samples.
    Stabilize(StabilizeArgs),
    /// Learn the forest from a connectivity-flagged stream, then stabilize.
    StabilizeUnknown(StabilizeUnknownArgs),
    /// Find a forest in which every sample is connected.
    InferForest(InferForestArgs),
    /// Decide whether a labeled instance has a consistent path or forest.
    SolveConsistency(SolveArgs),
    /// Reduce a DIMACS (3,B2)-SAT formula to a consistency instance.
    Reduce(ReduceArgs),
    /// Write the cycle counterexample games and distribution.
    Counterexample(CounterexampleArgs),
    /// Build a valuation realizing the given labels for one player.
    Shatter(ShatterArgs),
    /// Blocking probability of a partition under a distribution.
    Check(CheckArgs),
    /// Repeated random trials of the stabilization pipeline.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct StabilizeArgs {
    #[arg(long)]
    game: PathBuf,
    /// JSON array of `{"coalition", "values"}`.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Run even with fewer samples than the bound requires.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct StabilizeUnknownArgs {
    /// JSON array of `{"coalition", "values", "connected"}`.
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Args, Debug)]
struct InferForestArgs {
    /// JSON array of `{"vertices", "label"}` with every label 1.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Backtrack,
    Bruteforce,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// A `reduce` output, or `{"n", "samples", "target"}`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Backtrack)]
    method: Method,
    /// Search budget in seconds.
    #[arg(long, env = "HEDONIC_TIMEOUT_SECS", default_value_t = 60.0)]
    timeout: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Path,
    Forest,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetArg::Path)]
    target: TargetArg,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    /// Cycle length.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args, Debug)]
struct ShatterArgs {
    /// `{"n", "edges"}`.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    player: usize,
    /// JSON array of `{"coalition", "label", "threshold"?}`.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// `{"coalitions", "probabilities"?}`.
    #[arg(long)]
    distribution: PathBuf,
    /// Estimate from this many fresh draws instead of summing exactly.
    #[arg(long)]
    fresh: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EvaluationArg {
    Exact,
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PipelineArg {
    Known,
    Unknown,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Players per random game.
    #[arg(long, default_value_t = 15)]
    n: usize,
    /// Fixed game instead of random trees; hashed utilities are reseeded per trial.
    #[arg(long)]
    game: Option<PathBuf>,
    /// Random forests keeping each tree edge with this probability.
    #[arg(long)]
    keep_probability: Option<f64>,
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = hedonic_core::sampling::DEFAULT_STOP_PROBABILITY)]
    stop_probability: f64,
    /// Probability that a draw is a uniform random subset.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = EvaluationArg::Exact)]
    evaluation: EvaluationArg,
    #[arg(long, default_value_t = 10_000)]
    fresh: usize,
    /// Support size cap for exact evaluation.
    #[arg(long, default_value_t = 1 << 16)]
    max_states: usize,
    #[arg(long, value_enum, default_value_t = PipelineArg::Known)]
    pipeline: PipelineArg,
    /// Samples per trial; defaults to the sample-size bound.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
