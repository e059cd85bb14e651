mod common;

use common::{hashed_tree_game, rng};
use hedonic_core::game::strongly_blocks;
use hedonic_core::sampling::{
    derive_seed, draw, labeled_samples, GraphSource, GrowSampler, RandomGameSpec, UtilityScheme,
};
use hedonic_core::stabilizer::{required_sample_size, run_stabilizer};
use hedonic_core::{CoalitionDistribution, HedonicGame, LabeledSample, PacParams};
use proptest::prelude::*;
use rand::Rng;

fn forest_game(n: usize, seed: u64, keep: Option<f64>) -> HedonicGame {
    match keep {
        None => hashed_tree_game(n, seed),
        Some(keep_probability) => RandomGameSpec {
            n,
            graph: GraphSource::RandomForest { keep_probability },
            utilities: UtilityScheme::Hash,
            seed,
        }
        .build()
        .unwrap(),
    }
}

fn samples_for(game: &HedonicGame, seed: u64, m: usize) -> Vec<LabeledSample> {
    let dist = CoalitionDistribution::Generative(GrowSampler::new(game.graph().clone(), 0.3).unwrap());
    labeled_samples(game, &draw(&dist, seed, m).unwrap()).unwrap()
}

/// `x -> a x` on one side of zero, `b x` on the other, then `x + c x^3`.
fn monotone(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        let y = if x >= 0.0 { a * x } else { b * x };
        y + c * y * y * y
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guaranteed_coalitions_respect_floors(
        n in 1usize..14,
        seed in any::<u64>(),
        m in 0usize..150,
        keep in prop::option::of(0.2f64..1.0),
    ) {
        let game = forest_game(n, seed, keep);
        let samples = samples_for(&game, seed, m);
        let run = run_stabilizer(game.graph(), &samples).unwrap();
        let f = &run.forest;
        for i in 0..n {
            let b = run.state.guaranteed(i).unwrap();
            prop_assert!(b.contains(i));
            prop_assert!(b.iter().all(|j| f.is_descendant(j, i)));
            prop_assert!(game.graph().is_connected(b).unwrap());
            prop_assert_eq!(run.state.guaranteed_value(i), game.value(i, b).unwrap());
            for j in b.iter().filter(|&j| j != i) {
                prop_assert!(game.value(j, b).unwrap() >= run.state.guaranteed_value(j));
            }
        }
        // Each block is B_i for exactly its top node.
        let mut owners = 0;
        for block in run.partition.blocks() {
            let top = f.top_node(block).unwrap();
            prop_assert_eq!(run.state.guaranteed(top).unwrap(), block);
            prop_assert!(block.iter().all(|j| j == top || f.depth(j) > f.depth(top)));
            owners += 1;
        }
        prop_assert_eq!(owners, run.partition.blocks().len());
        prop_assert_eq!(run.partition.blocks().iter().map(|b| b.len()).sum::<usize>(), n);
    }

    #[test]
    fn output_depends_only_on_rankings(n in 2usize..12, seed in any::<u64>(), m in 1usize..120) {
        let game = hashed_tree_game(n, seed);
        let samples = samples_for(&game, seed, m);
        let base = run_stabilizer(game.graph(), &samples).unwrap().partition;
        prop_assert_eq!(&base, &run_stabilizer(game.graph(), &samples).unwrap().partition);
        let mut r = rng(seed);
        for _ in 0..20 {
            let fs: Vec<_> = (0..n)
                .map(|_| monotone(r.gen_range(0.1..10.0), r.gen_range(0.1..10.0), r.gen_range(0.0..3.0)))
                .collect();
            let moved: Vec<LabeledSample> = samples.iter().map(|s| s.map_values(|p, v| fs[p](v))).collect();
            prop_assert_eq!(&base, &run_stabilizer(game.graph(), &moved).unwrap().partition);
        }
    }
}

/// Splits the blocking mass by the blocker's top node: each node should
/// carry less than `epsilon / n` in at least `1 - delta` of trials.
#[test]
fn no_node_carries_heavy_blocking_mass() {
    let (n, trials) = (10, 40);
    let params = PacParams::new(0.25, 0.25).unwrap();
    let m = required_sample_size(n, params).unwrap();
    let mut good = 0;
    for t in 0..trials {
        let seed = derive_seed(77, t);
        let game = hashed_tree_game(n, seed);
        let sampler = GrowSampler::new(game.graph().clone(), 0.3).unwrap();
        let run = run_stabilizer(game.graph(), &samples_for(&game, derive_seed(seed, 2), m)).unwrap();
        let exact = sampler.exact_distribution(1 << 16).unwrap();
        let mut per_node = vec![0.0; n];
        for (s, p) in exact.support().unwrap() {
            if !s.is_empty() && strongly_blocks(&game, s, &run.partition).unwrap() {
                per_node[run.forest.top_node(s).unwrap()] += p;
            }
        }
        if per_node.iter().all(|&p| p < params.epsilon() / n as f64) {
            good += 1;
        }
    }
    let rate = good as f64 / trials as f64;
    assert!(rate >= 0.70, "per-node bound held in {good}/{trials} trials");
}
