//! Monte Carlo verification of the PAC guarantee: repeated trials of
//! generate game, draw samples, stabilize, measure blocking probability.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{blocking_probability, blocking_support, strongly_blocks, CoalitionStructure, HedonicGame};
use crate::graph::Coalition;
use crate::sampling::{
    derive_seed, draw, draw_range, labeled_samples, CoalitionDistribution, GrowSampler, RandomGameSpec,
};
use crate::stabilizer::{
    pac_stabilize, pac_stabilize_unknown_forest, required_sample_size, unknown_forest_phase_sizes, PacParams,
    StreamSample,
};

/// A Monte Carlo blocking rate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalRate {
    pub rate: f64,
    pub standard_error: f64,
    pub draws: usize,
}

/// Fraction of `fresh_count` i.i.d. draws from `dist` that strongly block
/// `pi`, with standard error `sqrt(p (1 - p) / fresh_count)`.
pub fn empirical_blocking_rate(
    game: &HedonicGame,
    pi: &CoalitionStructure,
    dist: &CoalitionDistribution,
    fresh_count: usize,
    seed: u64,
) -> Result<EmpiricalRate> {
    if fresh_count == 0 {
        return Err(Error::invalid("fresh_count must be at least 1"));
    }
    let draws = draw(dist, seed, fresh_count)?;
    let mut blocked = 0usize;
    for s in &draws {
        if strongly_blocks(game, s, pi)? {
            blocked += 1;
        }
    }
    let p = blocked as f64 / fresh_count as f64;
    Ok(EmpiricalRate {
        rate: p,
        standard_error: (p * (1.0 - p) / fresh_count as f64).sqrt(),
        draws: fresh_count,
    })
}

/// Exact blocking probability and the blocking support coalitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub blocking_probability: f64,
    pub blockers: Vec<Coalition>,
}

pub fn check(game: &HedonicGame, pi: &CoalitionStructure, dist: &CoalitionDistribution) -> Result<CheckReport> {
    let support = blocking_support(game, pi, dist)?;
    Ok(CheckReport {
        blocking_probability: support.iter().fold(0.0, |acc, (_, p)| acc + p),
        blockers: support.into_iter().map(|(s, _)| s).collect(),
    })
}

/// How a trial's output is scored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluation {
    /// Exact probability over the sampler's full support; fails if the
    /// support has more than `max_states` sets.
    Exact {
        max_states: usize,
    },
    Empirical {
        fresh: usize,
    },
}

/// Whether the learner is told the interaction forest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    KnownForest,
    /// Learn the forest from connectivity-flagged samples first.
    UnknownForest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Template; each trial replaces the seed with its own.
    pub game: RandomGameSpec,
    pub stop_probability: f64,
    /// Probability of a uniform random (usually disconnected) draw.
    pub noise: f64,
    pub params: PacParams,
    pub trials: usize,
    pub evaluation: Evaluation,
    pub pipeline: Pipeline,
    /// Overrides the sample count the bounds prescribe.
    pub samples: Option<usize>,
    /// A trial passes when its blocking probability is below
    /// `epsilon + tolerance`.
    pub tolerance: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if let Evaluation::Empirical { fresh } = self.evaluation {
            if fresh < 1000 {
                return Err(Error::invalid(format!(
                    "empirical evaluation needs at least 1000 fresh draws, got {fresh}"
                )));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub blocking_prob: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub pass_rate: f64,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    /// Rows only (no timing), so identical configs give identical bytes.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::invalid(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }
}

/// Everything a single trial produced.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub game: HedonicGame,
    pub partition: CoalitionStructure,
    pub row: TrialRow,
}

/// Runs trial `trial` of `cfg`; its seed is `derive_seed(cfg.seed, trial)`.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialOutcome> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let spec = RandomGameSpec {
        seed,
        ..cfg.game.clone()
    };
    let game = spec.build()?;
    let n = game.n();
    let sampler = GrowSampler::new(game.graph().clone(), cfg.stop_probability)?.with_noise(cfg.noise)?;
    let dist = CoalitionDistribution::Generative(sampler.clone());
    let draw_seed = derive_seed(seed, 2);
    let (partition, m) = match cfg.pipeline {
        Pipeline::KnownForest => {
            let m = match cfg.samples {
                Some(m) => m,
                None => required_sample_size(n, cfg.params)?,
            };
            let coalitions = draw(&dist, draw_seed, m)?;
            let samples = labeled_samples(&game, &coalitions)?;
            (pac_stabilize(game.graph(), &samples, cfg.params, true)?, m)
        }
        Pipeline::UnknownForest => {
            let m = match cfg.samples {
                Some(m) => m,
                None => {
                    let (a, b) = unknown_forest_phase_sizes(n, cfg.params)?;
                    a + b
                }
            };
            let coalitions = draw_range(&dist, draw_seed, 0, m)?;
            let stream = coalitions
                .into_iter()
                .map(|c| stream_sample(&game, c))
                .collect::<Result<Vec<_>>>()?;
            (pac_stabilize_unknown_forest(&stream, n, cfg.params)?.partition, m)
        }
    };
    let blocking_prob = match cfg.evaluation {
        Evaluation::Exact { max_states } => {
            blocking_probability(&game, &partition, &sampler.exact_distribution(max_states)?)?
        }
        Evaluation::Empirical { fresh } => {
            empirical_blocking_rate(&game, &partition, &dist, fresh, derive_seed(seed, 3))?.rate
        }
    };
    let row = TrialRow {
        trial,
        seed,
        n,
        m,
        epsilon: cfg.params.epsilon(),
        delta: cfg.params.delta(),
        blocking_prob,
        pass: blocking_prob < cfg.params.epsilon() + cfg.tolerance,
    };
    Ok(TrialOutcome { game, partition, row })
}

/// A labeled draw plus its true connectivity.
pub fn stream_sample(game: &HedonicGame, coalition: Coalition) -> Result<StreamSample> {
    let connected = game.graph().is_connected(&coalition)?;
    let sample = labeled_samples(game, std::slice::from_ref(&coalition))?
        .pop()
        .expect("one sample per coalition");
    Ok(StreamSample { sample, connected })
}

/// Runs every trial in parallel; rows come back in trial order. A failing
/// trial aborts the run and names its seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(cfg, t).map(|o| o.row).map_err(|e| {
                Error::invalid(format!(
                    "trial {t} (seed {}) failed: {e}",
                    derive_seed(cfg.seed, t as u64)
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passes = rows.iter().filter(|r| r.pass).count();
    Ok(ExperimentReport {
        pass_rate: passes as f64 / rows.len() as f64,
        rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardness::build_cycle_counterexample;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            game: RandomGameSpec::hashed_tree(6, 0),
            stop_probability: 0.3,
            noise: 0.0,
            params: PacParams::new(0.5, 0.5).unwrap(),
            trials: 3,
            evaluation: Evaluation::Exact { max_states: 1 << 12 },
            pipeline: Pipeline::KnownForest,
            samples: None,
            tolerance: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn counterexample_rates() {
        let ce = build_cycle_counterexample(4).unwrap();
        let grand = CoalitionStructure::grand(4);
        let single = CoalitionStructure::singletons(4);
        let r = empirical_blocking_rate(&ce.gamma2, &grand, &ce.distribution, 10_000, 1).unwrap();
        assert_eq!(r.rate, 0.0);
        let r = empirical_blocking_rate(&ce.gamma2, &single, &ce.distribution, 10_000, 1).unwrap();
        assert_eq!(r.rate, 1.0);
        assert!(empirical_blocking_rate(&ce.gamma2, &single, &ce.distribution, 0, 1).is_err());
    }

    #[test]
    fn point_mass_on_non_blocker() {
        let ce = build_cycle_counterexample(4).unwrap();
        let d = CoalitionDistribution::point(Coalition::from(vec![0, 1]));
        let r = empirical_blocking_rate(&ce.gamma1, &CoalitionStructure::singletons(4), &d, 1000, 5).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn check_lists_blockers() {
        let ce = build_cycle_counterexample(4).unwrap();
        let r = check(&ce.gamma1, &CoalitionStructure::singletons(4), &ce.distribution).unwrap();
        assert_eq!(r.blocking_probability, 0.0);
        assert!(r.blockers.is_empty());
        let r = check(&ce.gamma2, &CoalitionStructure::singletons(4), &ce.distribution).unwrap();
        assert_eq!(r.blockers, ce.sets.to_vec());
    }

    #[test]
    fn experiments_are_reproducible() {
        let cfg = small_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 3);
        assert!(a
            .to_csv()
            .unwrap()
            .starts_with("trial,seed,n,m,epsilon,delta,blocking_prob,pass\n"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small_config();
        cfg.evaluation = Evaluation::Empirical { fresh: 10 };
        assert!(run_experiment(&cfg).is_err());
    }
}
