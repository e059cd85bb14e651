#![allow(dead_code)]

use hedonic_core::inference::ConnectivitySample;
use hedonic_core::sampling::RandomGameSpec;
use hedonic_core::{Coalition, HedonicGame};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(members: &[usize]) -> Coalition {
    Coalition::new(members.iter().copied()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn hashed_tree_game(n: usize, seed: u64) -> HedonicGame {
    RandomGameSpec::hashed_tree(n, seed).build().unwrap()
}

pub fn conn(members: &[usize]) -> ConnectivitySample {
    ConnectivitySample::connected(members.iter().copied()).unwrap()
}

pub fn disc(members: &[usize]) -> ConnectivitySample {
    ConnectivitySample::disconnected(members.iter().copied()).unwrap()
}

/// A uniformly random nonempty subset of `0..n`.
pub fn random_subset(n: usize, rng: &mut ChaCha8Rng) -> Coalition {
    use rand::Rng;
    loop {
        let members: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !members.is_empty() {
            return Coalition::new(members).unwrap();
        }
    }
}
