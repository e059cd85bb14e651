use std::fmt;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use hedonic_core::hardness::{
    build_cycle_counterexample, build_shattering_valuation, extract_assignment, realizes_labels, reduce_sat_to_forest,
    reduce_sat_to_path, stable_sets_disjoint, Assignment, B2SatFormula, ReductionInstance, ShatterTarget, Target,
    CYCLE_ENUMERATION_LIMIT,
};
use hedonic_core::harness::{check, empirical_blocking_rate, run_experiment, Evaluation, ExperimentConfig, Pipeline};
use hedonic_core::inference::{
    backtrack_consistent_path, bruteforce_consistent_forest, bruteforce_consistent_path, infer_forest,
    ConnectivitySample, PathSearch,
};
use hedonic_core::io::{read_json, write_json, DistributionFile, GameFile, PartitionFile};
use hedonic_core::sampling::{GraphSource, RandomGameSpec, UtilityScheme};
use hedonic_core::stabilizer::StreamSample;
use hedonic_core::{
    pac_stabilize, pac_stabilize_unknown_forest, Error, HedonicGame, InteractionGraph, LabeledSample, PacParams,
    PlayerId, UtilityOracle,
};

use crate::{
    CheckArgs, Cli, Command, CounterexampleArgs, EvaluationArg, ExperimentArgs, Format, InferForestArgs, Method,
    PipelineArg, ReduceArgs, ShatterArgs, SolveArgs, StabilizeArgs, StabilizeUnknownArgs, TargetArg,
};

/// Misuse that clap cannot catch.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const TIMED_OUT: u8 = 3;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NotAForest
                | Error::NotB2(_)
                | Error::InferenceFailed
                | Error::InsufficientSamples { .. }
                | Error::Contradiction(_) => 2,
                Error::Capacity { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}

pub fn run(cli: &Cli) -> Result<u8> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Experiment(_)) {
        return Err(Usage("--format csv is only supported by `experiment`".into()).into());
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Stabilize(a) => stabilize(a, out),
        Command::StabilizeUnknown(a) => stabilize_unknown(a, out),
        Command::InferForest(a) => infer(a, out),
        Command::SolveConsistency(a) => solve(a, out),
        Command::Reduce(a) => reduce(a, out),
        Command::Counterexample(a) => counterexample(a, out),
        Command::Shatter(a) => shatter(a, out),
        Command::Check(a) => check_partition(a, cli.seed, out),
        Command::Experiment(a) => experiment(a, cli.seed, cli.format, out),
    }
}

fn emit_json<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value)?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn params(epsilon: f64, delta: f64) -> Result<PacParams> {
    Ok(PacParams::new(epsilon, delta)?)
}

fn load_game(path: &Path) -> Result<HedonicGame> {
    let file: GameFile = read_json(path)?;
    Ok(file.into_game()?)
}

fn stabilize(a: &StabilizeArgs, out: Option<&Path>) -> Result<u8> {
    let game = load_game(&a.game)?;
    let samples: Vec<LabeledSample> = read_json(&a.samples)?;
    let pi = pac_stabilize(game.graph(), &samples, params(a.epsilon, a.delta)?, a.force)?;
    emit_json(out, &PartitionFile::from_partition(&pi))?;
    Ok(0)
}

#[derive(Serialize)]
struct UnknownForestReport {
    blocks: Vec<hedonic_core::Coalition>,
    inferred: InteractionGraph,
    phase_two_kept: usize,
}

fn stabilize_unknown(a: &StabilizeUnknownArgs, out: Option<&Path>) -> Result<u8> {
    let stream: Vec<StreamSample> = read_json(&a.stream)?;
    let outcome = pac_stabilize_unknown_forest(&stream, a.n, params(a.epsilon, a.delta)?)?;
    emit_json(
        out,
        &UnknownForestReport {
            blocks: outcome.partition.blocks().to_vec(),
            inferred: outcome.inferred,
            phase_two_kept: outcome.phase_two_kept,
        },
    )?;
    Ok(0)
}

fn infer(a: &InferForestArgs, out: Option<&Path>) -> Result<u8> {
    let samples: Vec<ConnectivitySample> = read_json(&a.samples)?;
    let forest = infer_forest(&samples, a.n)?.ok_or(Error::InferenceFailed)?;
    emit_json(out, &forest)?;
    Ok(0)
}

/// A bare consistency instance; `reduce` output parses as one too.
#[derive(Deserialize)]
struct PlainInstance {
    #[serde(alias = "players")]
    n: usize,
    samples: Vec<ConnectivitySample>,
    #[serde(default = "default_target")]
    target: Target,
}

fn default_target() -> Target {
    Target::Forest
}

#[derive(Serialize, Default)]
struct Solution {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    ordering: Option<Vec<PlayerId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forest: Option<InteractionGraph>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Assignment>,
}

fn solve(a: &SolveArgs, out: Option<&Path>) -> Result<u8> {
    let value: serde_json::Value = read_json(&a.instance)?;
    let reduction: Option<ReductionInstance> = if value.get("formula").is_some() {
        Some(serde_json::from_value(value.clone()).context("malformed reduction instance")?)
    } else {
        None
    };
    let plain: PlainInstance = serde_json::from_value(value).context("malformed instance")?;
    if !(a.timeout > 0.0) {
        return Err(Usage(format!("timeout must be positive, got {}", a.timeout)).into());
    }
    let mut solution = Solution::default();
    let ordering = match (a.method, plain.target) {
        // A reduction's forest family only admits Hamiltonian paths, so the
        // path search decides both targets.
        (Method::Backtrack, _) => {
            match backtrack_consistent_path(&plain.samples, plain.n, Some(Duration::from_secs_f64(a.timeout)))? {
                PathSearch::Found(o) => Some(o),
                PathSearch::Absent => None,
                PathSearch::Unknown => {
                    solution.status = "unknown";
                    emit_json(out, &solution)?;
                    eprintln!("error: search budget of {}s exhausted", a.timeout);
                    return Ok(TIMED_OUT);
                }
            }
        }
        (Method::Bruteforce, Target::Path) => bruteforce_consistent_path(&plain.samples, plain.n)?,
        (Method::Bruteforce, Target::Forest) => {
            let forest = bruteforce_consistent_forest(&plain.samples, plain.n)?;
            solution.status = if forest.is_some() { "found" } else { "absent" };
            solution.forest = forest;
            emit_json(out, &solution)?;
            return Ok(0);
        }
    };
    match ordering {
        Some(o) => {
            solution.status = "found";
            if let Some(inst) = &reduction {
                solution.assignment = Some(extract_assignment(&o, inst)?);
            }
            solution.ordering = Some(o);
        }
        None => solution.status = "absent",
    }
    emit_json(out, &solution)?;
    Ok(0)
}

fn reduce(a: &ReduceArgs, out: Option<&Path>) -> Result<u8> {
    let text = std::fs::read_to_string(&a.cnf).with_context(|| format!("reading {}", a.cnf.display()))?;
    let formula = B2SatFormula::from_dimacs(&text)?;
    let inst = match a.target {
        TargetArg::Path => reduce_sat_to_path(&formula)?,
        TargetArg::Forest => reduce_sat_to_forest(&formula)?,
    };
    emit_json(out, &inst)?;
    Ok(0)
}

fn counterexample(a: &CounterexampleArgs, out: Option<&Path>) -> Result<u8> {
    let dir = out.ok_or_else(|| Usage("counterexample needs --out <dir>".into()))?;
    let ce = build_cycle_counterexample(a.k)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("gamma1.json"), &GameFile::from_game(&ce.gamma1))?;
    write_json(&dir.join("gamma2.json"), &GameFile::from_game(&ce.gamma2))?;
    write_json(
        &dir.join("D.json"),
        &DistributionFile::from_distribution(&ce.distribution)?,
    )?;
    if a.k <= CYCLE_ENUMERATION_LIMIT {
        let report = stable_sets_disjoint(a.k)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(0)
}

fn shatter(a: &ShatterArgs, out: Option<&Path>) -> Result<u8> {
    let graph: InteractionGraph = read_json(&a.graph)?;
    let targets: Vec<ShatterTarget> = read_json(&a.labels)?;
    let table = build_shattering_valuation(&graph, a.player, &targets)?;
    assert!(
        realizes_labels(&table, a.player, &targets),
        "constructed valuation misses a label"
    );
    // Building the game certifies the table against the graph.
    let game = HedonicGame::new(graph, UtilityOracle::Table(table))?;
    emit_json(out, &GameFile::from_game(&game))?;
    Ok(0)
}

fn check_partition(a: &CheckArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let game = load_game(&a.game)?;
    let pi = read_json::<PartitionFile>(&a.partition)?.into_partition(game.n())?;
    let dist = read_json::<DistributionFile>(&a.distribution)?.into_distribution()?;
    match a.fresh {
        Some(fresh) => emit_json(out, &empirical_blocking_rate(&game, &pi, &dist, fresh, seed)?)?,
        None => emit_json(out, &check(&game, &pi, &dist)?)?,
    }
    Ok(0)
}

fn experiment(a: &ExperimentArgs, seed: u64, format: Format, out: Option<&Path>) -> Result<u8> {
    let spec = match &a.game {
        Some(path) => {
            let game = load_game(path)?;
            let utilities = match game.oracle() {
                UtilityOracle::Table(t) => UtilityScheme::Table(t.clone()),
                UtilityOracle::Hashed(_) => UtilityScheme::Hash,
            };
            RandomGameSpec {
                n: game.n(),
                graph: GraphSource::Explicit(game.graph().clone()),
                utilities,
                seed,
            }
        }
        None => RandomGameSpec {
            n: a.n,
            graph: match a.keep_probability {
                Some(keep_probability) => GraphSource::RandomForest { keep_probability },
                None => GraphSource::RandomTree,
            },
            utilities: UtilityScheme::Hash,
            seed,
        },
    };
    let cfg = ExperimentConfig {
        game: spec,
        stop_probability: a.stop_probability,
        noise: a.noise,
        params: params(a.epsilon, a.delta)?,
        trials: a.trials,
        evaluation: match a.evaluation {
            EvaluationArg::Exact => Evaluation::Exact {
                max_states: a.max_states,
            },
            EvaluationArg::Empirical => Evaluation::Empirical { fresh: a.fresh },
        },
        pipeline: match a.pipeline {
            PipelineArg::Known => Pipeline::KnownForest,
            PipelineArg::Unknown => Pipeline::UnknownForest,
        },
        samples: a.samples,
        tolerance: a.tolerance,
        seed,
    };
    let report = run_experiment(&cfg)?;
    match format {
        Format::Json => emit_json(out, &report)?,
        Format::Csv => {
            let csv = report.to_csv()?;
            match out {
                Some(p) => report.write_csv(p)?,
                None => print!("{csv}"),
            }
        }
    }
    eprintln!(
        "pass rate {:.3} over {} trials in {:.2}s",
        report.pass_rate,
        report.rows.len(),
        report.wall_time_secs
    );
    Ok(0)
}
