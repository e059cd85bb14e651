//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{c, rng};
use hedonic_core::game::connected_masks;
use hedonic_core::hardness::{
    brute_force_sat, build_shattering_valuation, extract_assignment, random_b2_formula, realizes_labels,
    reduce_sat_to_path, stable_sets_disjoint, B2SatFormula, ShatterTarget,
};
use hedonic_core::harness::{run_experiment, Evaluation, ExperimentConfig, Pipeline};
use hedonic_core::inference::{
    backtrack_consistent_path, bruteforce_consistent_forest, infer_forest, ConnectivitySample, PathSearch,
};
use hedonic_core::sampling::{derive_seed, draw, random_connected_sampler, random_tree, RandomGameSpec};
use hedonic_core::stabilizer::{forest_class_sample_size, required_sample_size, run_stabilizer};
use hedonic_core::{
    Coalition, CoalitionStructure, HedonicGame, InteractionGraph, LabeledSample, PacParams, UtilityOracle,
};
use rand::seq::SliceRandom;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration, v: Verdict) -> Verdict {
    let on_time = elapsed < limit;
    Verdict {
        pass: v.pass && on_time,
        detail: format!(
            "{}; {:.2}s (limit {}s)",
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    }
}

fn stabilizer_pass_rate() -> Verdict {
    let params = PacParams::new(0.25, 0.25).unwrap();
    let m = required_sample_size(15, params).unwrap();
    let cfg = ExperimentConfig {
        game: RandomGameSpec::hashed_tree(15, 0),
        stop_probability: 0.3,
        noise: 0.0,
        params,
        trials: 40,
        evaluation: Evaluation::Exact { max_states: 1 << 20 },
        pipeline: Pipeline::KnownForest,
        samples: None,
        tolerance: 0.0,
        seed: 2024,
    };
    let report = run_experiment(&cfg).unwrap();
    let rows_m = report.rows.iter().all(|r| r.m == 246);
    verdict(
        m == 246 && rows_m && report.pass_rate >= 0.70,
        format!(
            "m={m}, pass rate {:.3} over {} trials (need >= 0.70)",
            report.pass_rate,
            report.rows.len()
        ),
    )
}

fn sample(members: &[usize], values: &[(usize, f64)]) -> LabeledSample {
    LabeledSample::new(c(members), values.iter().copied().collect::<BTreeMap<_, _>>()).unwrap()
}

fn trace_fidelity() -> Verdict {
    let g = InteractionGraph::path(3);
    let samples = vec![
        sample(&[1, 2], &[(1, 5.0), (2, 5.0)]),
        sample(&[0, 1, 2], &[(0, 1.0), (1, 1.0), (2, 1.0)]),
        sample(&[0, 1], &[(0, 2.0), (1, -1.0)]),
    ];
    let expected = CoalitionStructure::new(3, vec![c(&[0]), c(&[1, 2])]).unwrap();
    let base = run_stabilizer(&g, &samples).unwrap().partition;
    let mut r = rng(2);
    let mut invariant = 0;
    for _ in 0..20 {
        // Per player: different slopes on each side of 0, then x + k x^3.
        let fs: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (r.gen_range(0.1..10.0), r.gen_range(0.1..10.0), r.gen_range(0.0..2.0)))
            .collect();
        let moved: Vec<LabeledSample> = samples
            .iter()
            .map(|s| {
                s.map_values(|p, x| {
                    let (a, b, k) = fs[p];
                    let y = if x >= 0.0 { a * x } else { b * x };
                    y + k * y * y * y
                })
            })
            .collect();
        if run_stabilizer(&g, &moved).unwrap().partition == expected {
            invariant += 1;
        }
    }
    verdict(
        base == expected && invariant == 20,
        format!(
            "partition {:?}, unchanged under {invariant}/20 transforms",
            base.blocks()
        ),
    )
}

fn sample_sizes() -> Verdict {
    let p = PacParams::new(0.1, 0.05).unwrap();
    let a = required_sample_size(10, p).unwrap();
    let b = forest_class_sample_size(10, p).unwrap();
    verdict(
        a == 530 && b == 277,
        format!("required {a} (want 530), forest class {b} (want 277)"),
    )
}

fn cycle_counterexample() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 3..=5 {
        let r = stable_sets_disjoint(k).unwrap();
        let grand = CoalitionStructure::grand(k);
        let this = r.disjoint
            && !r.stable_first.is_empty()
            && !r.stable_second.is_empty()
            && r.first_has_singleton
            && r.second_has_cycle
            && r.stable_second == vec![grand];
        ok &= this;
        parts.push(format!(
            "k={k}: |A1|={} |A2|={} disjoint={}",
            r.stable_first.len(),
            r.stable_second.len(),
            r.disjoint
        ));
    }
    verdict(ok, parts.join(", "))
}

fn forest_inference() -> Verdict {
    // (a) Agreement with exhaustive search on positive-only samples.
    let mut r = rng(5);
    let mut agree = 0;
    let mut found = 0;
    for _ in 0..500 {
        let n = r.gen_range(2..=6);
        let count = r.gen_range(1..=7);
        let samples: Vec<ConnectivitySample> = (0..count)
            .map(|_| {
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(&mut r);
                let size = r.gen_range(1..=n.min(4));
                ConnectivitySample::connected(all[..size].iter().copied()).unwrap()
            })
            .collect();
        let fast = infer_forest(&samples, n).unwrap().is_some();
        let slow = bruteforce_consistent_forest(&samples, n).unwrap().is_some();
        agree += (fast == slow) as usize;
        found += fast as usize;
    }
    // (b) Learning a hidden 40-vertex tree from 200 connected draws.
    let mut good_reps = 0;
    let mut coverage = Vec::new();
    for rep in 0..10u64 {
        let tree = random_tree(40, &mut rng(derive_seed(9, rep)));
        let dist = random_connected_sampler(&tree).unwrap();
        let train: Vec<ConnectivitySample> = draw(&dist, derive_seed(10, rep), 200)
            .unwrap()
            .into_iter()
            .map(|s| ConnectivitySample::connected(s.iter()).unwrap())
            .collect();
        let learned = infer_forest(&train, 40)
            .unwrap()
            .expect("the hidden tree explains its samples");
        let fresh = draw(&dist, derive_seed(11, rep), 10_000).unwrap();
        let hits = fresh.iter().filter(|s| learned.is_connected(s).unwrap()).count();
        let rate = hits as f64 / fresh.len() as f64;
        good_reps += (rate >= 0.999) as usize;
        coverage.push(format!("{rate:.4}"));
    }
    verdict(
        agree == 500 && good_reps >= 9,
        format!(
            "oracle agreement {agree}/500 ({found} feasible); reps with >= 99.9% coverage {good_reps}/10 [{}]",
            coverage.join(" ")
        ),
    )
}

fn unknown_forest_pipeline() -> Verdict {
    let cfg = ExperimentConfig {
        game: RandomGameSpec::hashed_tree(12, 0),
        stop_probability: 0.3,
        noise: 0.0,
        params: PacParams::new(0.3, 0.3).unwrap(),
        trials: 40,
        evaluation: Evaluation::Exact { max_states: 1 << 20 },
        pipeline: Pipeline::UnknownForest,
        samples: None,
        tolerance: 0.0,
        seed: 4048,
    };
    let report = run_experiment(&cfg).unwrap();
    verdict(
        report.pass_rate >= 0.65,
        format!(
            "pass rate {:.3} over {} trials with {} stream samples each (need >= 0.65)",
            report.pass_rate,
            report.rows.len(),
            report.rows[0].m
        ),
    )
}

const FIGURE_ONE: &str = "p cnf 3 4\n1 2 3 0\n1 2 -3 0\n-1 -2 3 0\n-1 -2 -3 0\n";

/// Every unsatisfiable (3,B2) formula on three variables, up to clause order.
const UNSATISFIABLE: [&str; 6] = [
    "1 1 2 ; -1 -1 2 ; -2 3 3 ; -2 -3 -3",
    "1 1 -2 ; -1 -1 -2 ; 2 3 3 ; 2 -3 -3",
    "1 1 3 ; -1 -1 3 ; 2 2 -3 ; -2 -2 -3",
    "1 1 -3 ; -1 -1 -3 ; 2 2 3 ; -2 -2 3",
    "1 2 2 ; 1 -2 -2 ; -1 3 3 ; -1 -3 -3",
    "1 3 3 ; 1 -3 -3 ; -1 2 2 ; -1 -2 -2",
];

fn dimacs(vars: usize, clauses: &str) -> String {
    let body: Vec<String> = clauses.split(';').map(|c| format!("{} 0", c.trim())).collect();
    format!("p cnf {vars} {}\n{}\n", body.len(), body.join("\n"))
}

fn reduction_round_trip() -> Verdict {
    let fig = B2SatFormula::from_dimacs(FIGURE_ONE).unwrap();
    let inst = reduce_sat_to_path(&fig).unwrap();
    let start = Instant::now();
    let search = backtrack_consistent_path(&inst.samples, inst.players, Some(Duration::from_secs(60))).unwrap();
    let search_time = start.elapsed();
    let fig_ok = match &search {
        PathSearch::Found(order) => {
            let a = extract_assignment(order, &inst).unwrap();
            fig.is_satisfied_by(&a)
        }
        _ => false,
    };
    let fig_ok = fig_ok && inst.players == 31 && inst.garbage_collectors == 3 && search_time < Duration::from_secs(60);

    let mut corpus: Vec<B2SatFormula> = UNSATISFIABLE
        .iter()
        .map(|c| B2SatFormula::from_dimacs(&dimacs(3, c)).unwrap())
        .collect();
    corpus.push(fig);
    let mut r = rng(7);
    corpus.extend((0..8).map(|_| random_b2_formula(3, &mut r).unwrap()));
    corpus.extend((0..4).map(|_| random_b2_formula(6, &mut r).unwrap()));
    let mut agree = 0;
    let mut sat_count = 0;
    for f in &corpus {
        let sat = brute_force_sat(f).unwrap().is_some();
        sat_count += sat as usize;
        let inst = reduce_sat_to_path(f).unwrap();
        let path = match backtrack_consistent_path(&inst.samples, inst.players, Some(Duration::from_secs(60))).unwrap()
        {
            PathSearch::Found(order) => f.is_satisfied_by(&extract_assignment(&order, &inst).unwrap()),
            PathSearch::Absent => false,
            PathSearch::Unknown => !sat,
        };
        agree += (sat == path) as usize;
    }
    verdict(
        fig_ok && agree == corpus.len() && corpus.len() >= 10,
        format!(
            "figure formula: 31 players, k=3, path in {:.3}s, assignment satisfies={fig_ok}; corpus agreement {agree}/{} ({sat_count} satisfiable)",
            search_time.as_secs_f64(),
            corpus.len()
        ),
    )
}

fn pseudo_shattering() -> Verdict {
    let star = InteractionGraph::star(8);
    let feasible: Vec<Coalition> = connected_masks(&star)
        .unwrap()
        .into_iter()
        .map(|m| Coalition::from_mask(m as u128))
        .filter(|s| s.contains(0) && s.len() > 1)
        .collect();
    let mut r = rng(8);
    let mut ok = 0;
    for _ in 0..100 {
        let targets: Vec<ShatterTarget> = feasible
            .choose_multiple(&mut r, 20)
            .map(|s| ShatterTarget {
                coalition: s.clone(),
                threshold: r.gen_range(-2.0..2.0),
                label: r.gen_bool(0.5),
            })
            .collect();
        let Ok(table) = build_shattering_valuation(&star, 0, &targets) else {
            continue;
        };
        let in_class = HedonicGame::new(star.clone(), UtilityOracle::Table(table.clone())).is_ok();
        if in_class && realizes_labels(&table, 0, &targets) {
            ok += 1;
        }
    }
    verdict(
        ok == 100,
        format!(
            "{ok}/100 labelings of 20 coalitions realized ({} feasible)",
            feasible.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Verdict); 8] = [
        ("known-forest PAC pass rate", 60, stabilizer_pass_rate),
        ("bottom-up trace and ordinal invariance", 1, trace_fidelity),
        ("sample-size formulas", 1, sample_sizes),
        ("cycle counterexample", 10, cycle_counterexample),
        ("forest inference", 60, forest_inference),
        ("unknown-forest pipeline", 120, unknown_forest_pipeline),
        ("SAT reduction round trip", 60, reduction_round_trip),
        ("pseudo-shattering on the 8-star", 5, pseudo_shattering),
    ];
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let v = within(start.elapsed(), Duration::from_secs(*limit), v);
        failed += !v.pass as usize;
        println!(
            "criterion {} ({name}): {} - {}",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
