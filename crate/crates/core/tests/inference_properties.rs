mod common;

use common::rng;
use hedonic_core::inference::{
    backtrack_consistent_path, bruteforce_consistent_forest, bruteforce_consistent_path, check_consistency,
    infer_forest, path_graph, ConnectivitySample, Label, PathSearch,
};
use hedonic_core::sampling::random_tree;
use hedonic_core::Coalition;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_positive_samples(n: usize, count: usize, r: &mut ChaCha8Rng) -> Vec<ConnectivitySample> {
    (0..count)
        .map(|_| {
            let size = r.gen_range(1..=n.min(4));
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(r);
            ConnectivitySample::connected(all[..size].iter().copied()).unwrap()
        })
        .collect()
}

/// Subsets labeled by a hidden path, with each label flipped at `noise`.
fn path_labeled_samples(n: usize, count: usize, noise: f64, r: &mut ChaCha8Rng) -> Vec<ConnectivitySample> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let g = path_graph(&order).unwrap();
    (0..count)
        .map(|_| {
            let size = r.gen_range(2..=n.min(4));
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(r);
            let s = Coalition::new(all[..size].iter().copied()).unwrap();
            let truth = g.is_connected(&s).unwrap();
            let label = truth != r.gen_bool(noise);
            ConnectivitySample::new(s, Label::from(label)).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inferred_forests_connect_every_sample(n in 1usize..10, count in 0usize..12, seed in any::<u64>()) {
        let samples = random_positive_samples(n, count, &mut rng(seed));
        if let Some(g) = infer_forest(&samples, n).unwrap() {
            prop_assert!(g.is_forest());
            prop_assert!(check_consistency(&g, &samples).unwrap());
        }
    }

    #[test]
    fn inference_matches_exhaustive_search(n in 1usize..7, count in 0usize..8, seed in any::<u64>()) {
        let samples = random_positive_samples(n, count, &mut rng(seed));
        let fast = infer_forest(&samples, n).unwrap();
        let slow = bruteforce_consistent_forest(&samples, n).unwrap();
        prop_assert_eq!(fast.is_some(), slow.is_some());
    }

    #[test]
    fn tree_samples_are_always_explained(n in 2usize..25, count in 1usize..40, seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = random_tree(n, &mut r);
        let dist = hedonic_core::sampling::random_connected_sampler(&tree).unwrap();
        let draws = hedonic_core::sampling::draw(&dist, seed, count).unwrap();
        let samples: Vec<_> = draws
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| ConnectivitySample::connected(s.iter()).unwrap())
            .collect();
        prop_assert!(infer_forest(&samples, n).unwrap().is_some());
    }

    #[test]
    fn path_search_matches_permutations(
        n in 2usize..9,
        count in 1usize..14,
        noise in prop::sample::select(vec![0.0, 0.1, 0.5]),
        seed in any::<u64>(),
    ) {
        let samples = path_labeled_samples(n, count, noise, &mut rng(seed));
        let slow = bruteforce_consistent_path(&samples, n).unwrap();
        match backtrack_consistent_path(&samples, n, None).unwrap() {
            PathSearch::Found(order) => {
                prop_assert!(slow.is_some(), "backtrack found {:?}, brute force found nothing", order);
                let mut sorted = order.clone();
                sorted.sort();
                prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
                prop_assert!(check_consistency(&path_graph(&order).unwrap(), &samples).unwrap());
            }
            PathSearch::Absent => prop_assert!(slow.is_none(), "brute force found {:?}", slow),
            PathSearch::Unknown => prop_assert!(false, "no budget was set"),
        }
        if noise == 0.0 {
            prop_assert!(slow.is_some());
        }
    }
}
