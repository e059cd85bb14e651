//! Coalition distributions, labeled samples and reproducible random games.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::{HedonicGame, UtilityOracle, UtilityTable};
use crate::graph::{Coalition, InteractionGraph, PlayerId};

pub const DEFAULT_STOP_PROBABILITY: f64 = 0.3;
const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Mixes a master seed with a stream index into an independent seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"hedonic-seed");
    h.update(master.to_le_bytes());
    h.update(stream.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

/// The RNG used for draw `index` under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Keyed-hash utilities: `u in (0,1)` per `(seed, player, coalition)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashValuation {
    seed: u64,
}

impl HashValuation {
    pub fn new(seed: u64) -> Self {
        HashValuation { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn unit(&self, player: PlayerId, coalition: &Coalition) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((player as u64).to_le_bytes());
        for m in coalition.iter() {
            h.update((m as u64).to_le_bytes());
        }
        let out = h.finalize();
        let x = u64::from_le_bytes(out[..8].try_into().expect("8 bytes"));
        ((x >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}

/// Grows a connected set from a uniform start vertex by adding uniform
/// boundary vertices, stopping with `stop_probability` after each
/// addition (or when the component is exhausted).
///
/// With `noise > 0`, each draw is instead, with probability `noise`, a
/// uniform subset whose size is uniform in `2..=min(4, n)`; such draws are
/// usually disconnected.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowSampler {
    graph: InteractionGraph,
    stop_probability: f64,
    noise: f64,
}

impl GrowSampler {
    pub fn new(graph: InteractionGraph, stop_probability: f64) -> Result<Self> {
        if graph.n() == 0 {
            return Err(Error::invalid("sampler needs a nonempty graph"));
        }
        if !(stop_probability > 0.0 && stop_probability <= 1.0) {
            return Err(Error::invalid("stop probability must lie in (0, 1]"));
        }
        Ok(GrowSampler {
            graph,
            stop_probability,
            noise: 0.0,
        })
    }

    pub fn with_noise(mut self, noise: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::invalid("noise must lie in [0, 1]"));
        }
        self.noise = if self.graph.n() >= 2 { noise } else { 0.0 };
        Ok(self)
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    fn noise_sizes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.graph.n().min(4)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Coalition {
        let n = self.graph.n();
        if self.noise > 0.0 && rng.gen::<f64>() < self.noise {
            let sizes = self.noise_sizes();
            let size = rng.gen_range(sizes);
            let picked = rand::seq::index::sample(rng, n, size);
            return Coalition::from(picked.into_vec());
        }
        let start = rng.gen_range(0..n);
        let mut members = vec![start];
        let mut boundary: BTreeSet<PlayerId> = self.graph.neighbors(start).iter().copied().collect();
        while !boundary.is_empty() {
            let pick = rng.gen_range(0..boundary.len());
            let v = *boundary.iter().nth(pick).expect("index in range");
            boundary.remove(&v);
            members.push(v);
            for &w in self.graph.neighbors(v) {
                if !members.contains(&w) {
                    boundary.insert(w);
                }
            }
            if rng.gen::<f64>() < self.stop_probability {
                break;
            }
        }
        Coalition::from(members)
    }

    /// The exact output distribution, by dynamic programming over the
    /// reachable connected sets. Fails once more than `max_states` sets
    /// are reachable.
    pub fn exact_distribution(&self, max_states: usize) -> Result<CoalitionDistribution> {
        let n = self.graph.n();
        if n > 128 {
            return Err(Error::Capacity {
                what: "exact sampler distribution player count",
                limit: 128,
                got: n,
            });
        }
        let nbr: Vec<u128> = (0..n)
            .map(|u| self.graph.neighbors(u).iter().fold(0u128, |m, &v| m | 1 << v))
            .collect();
        let boundary = |mask: u128| {
            let mut b = 0u128;
            let mut rest = mask;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                b |= nbr[v];
            }
            b & !mask
        };
        let grow_weight = 1.0 - self.noise;
        let mut terminal: HashMap<u128, f64> = HashMap::new();
        let mut layer: HashMap<u128, f64> = HashMap::new();
        let mut states = 0usize;
        // Start vertex: no stop check before the first addition.
        for v in 0..n {
            let mask = 1u128 << v;
            let b = boundary(mask);
            let p = grow_weight / n as f64;
            if b == 0 {
                *terminal.entry(mask).or_default() += p;
            } else {
                spread(&mut layer, mask, b, p);
            }
        }
        while !layer.is_empty() {
            states += layer.len();
            if states > max_states {
                return Err(Error::Capacity {
                    what: "exact sampler distribution states",
                    limit: max_states,
                    got: states,
                });
            }
            let mut next = HashMap::new();
            for (mask, p) in layer {
                let b = boundary(mask);
                let stop = if b == 0 { 1.0 } else { self.stop_probability };
                *terminal.entry(mask).or_default() += p * stop;
                if b != 0 && stop < 1.0 {
                    spread(&mut next, mask, b, p * (1.0 - stop));
                }
            }
            layer = next;
        }
        if self.noise > 0.0 {
            let sizes: Vec<usize> = self.noise_sizes().collect();
            for &size in &sizes {
                let subsets = binomial(n, size);
                let p = self.noise / sizes.len() as f64 / subsets;
                for_each_subset(n, size, |mask| *terminal.entry(mask).or_default() += p);
            }
        }
        let mut support: Vec<(u128, f64)> = terminal.into_iter().filter(|&(_, p)| p > 0.0).collect();
        support.sort_by_key(|&(m, _)| Coalition::from_mask(m));
        let (coalitions, probabilities) = support.into_iter().map(|(m, p)| (Coalition::from_mask(m), p)).unzip();
        CoalitionDistribution::finite(coalitions, probabilities)
    }
}

fn spread(layer: &mut HashMap<u128, f64>, mask: u128, boundary: u128, p: f64) {
    let share = p / boundary.count_ones() as f64;
    let mut rest = boundary;
    while rest != 0 {
        let v = rest.trailing_zeros();
        rest &= rest - 1;
        *layer.entry(mask | 1 << v).or_default() += share;
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u128)) {
    fn rec(start: usize, n: usize, left: usize, mask: u128, f: &mut impl FnMut(u128)) {
        if left == 0 {
            f(mask);
            return;
        }
        for v in start..=n - left {
            rec(v + 1, n, left - 1, mask | 1 << v, f);
        }
    }
    rec(0, n, k, 0, &mut f);
}

/// A distribution over coalitions: either explicit finite support or a
/// seeded generative procedure.
#[derive(Clone, Debug, PartialEq)]
pub enum CoalitionDistribution {
    FiniteSupport {
        coalitions: Vec<Coalition>,
        probabilities: Vec<f64>,
    },
    Generative(GrowSampler),
}

impl CoalitionDistribution {
    pub fn finite(coalitions: Vec<Coalition>, probabilities: Vec<f64>) -> Result<Self> {
        if coalitions.len() != probabilities.len() {
            return Err(Error::invalid("coalition and probability lists differ in length"));
        }
        if coalitions.is_empty() {
            return Err(Error::invalid("finite support must be nonempty"));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(CoalitionDistribution::FiniteSupport {
            coalitions,
            probabilities,
        })
    }

    pub fn uniform(coalitions: Vec<Coalition>) -> Result<Self> {
        let p = 1.0 / coalitions.len().max(1) as f64;
        let probabilities = vec![p; coalitions.len()];
        Self::finite(coalitions, probabilities)
    }

    pub fn point(coalition: Coalition) -> Self {
        CoalitionDistribution::FiniteSupport {
            coalitions: vec![coalition],
            probabilities: vec![1.0],
        }
    }

    /// `(coalition, probability)` pairs for finite-support distributions.
    pub fn support(&self) -> Option<impl Iterator<Item = (&Coalition, f64)> + '_> {
        match self {
            CoalitionDistribution::FiniteSupport {
                coalitions,
                probabilities,
            } => Some(coalitions.iter().zip(probabilities.iter().copied())),
            CoalitionDistribution::Generative(_) => None,
        }
    }
}

/// The grow-a-connected-set sampler with the default stop probability.
pub fn random_connected_sampler(graph: &InteractionGraph) -> Result<CoalitionDistribution> {
    Ok(CoalitionDistribution::Generative(GrowSampler::new(
        graph.clone(),
        DEFAULT_STOP_PROBABILITY,
    )?))
}

/// `count` i.i.d. draws; draw `k` depends only on `(seed, k)`.
pub fn draw(dist: &CoalitionDistribution, seed: u64, count: usize) -> Result<Vec<Coalition>> {
    draw_range(dist, seed, 0, count)
}

/// Draws with indices `start..start + count`.
pub fn draw_range(dist: &CoalitionDistribution, seed: u64, start: u64, count: usize) -> Result<Vec<Coalition>> {
    let indices = start..start + count as u64;
    match dist {
        CoalitionDistribution::FiniteSupport {
            coalitions,
            probabilities,
        } => {
            let weights = WeightedIndex::new(probabilities).map_err(|e| Error::invalid(format!("bad weights: {e}")))?;
            Ok(indices
                .map(|k| coalitions[weights.sample(&mut draw_rng(seed, k))].clone())
                .collect())
        }
        CoalitionDistribution::Generative(sampler) => {
            Ok(indices.map(|k| sampler.sample(&mut draw_rng(seed, k))).collect())
        }
    }
}

#[derive(Deserialize, Serialize)]
struct RawSample {
    coalition: Coalition,
    values: BTreeMap<PlayerId, f64>,
}

/// A sampled coalition with the utilities of each of its members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSample", into = "RawSample")]
pub struct LabeledSample {
    coalition: Coalition,
    values: BTreeMap<PlayerId, f64>,
}

impl TryFrom<RawSample> for LabeledSample {
    type Error = Error;

    fn try_from(raw: RawSample) -> Result<Self> {
        LabeledSample::new(raw.coalition, raw.values)
    }
}

impl From<LabeledSample> for RawSample {
    fn from(s: LabeledSample) -> Self {
        RawSample {
            coalition: s.coalition,
            values: s.values,
        }
    }
}

impl LabeledSample {
    /// `values` must be keyed by exactly the coalition's members.
    pub fn new(coalition: Coalition, values: BTreeMap<PlayerId, f64>) -> Result<Self> {
        if !values.keys().copied().eq(coalition.iter()) {
            return Err(Error::invalid(format!(
                "sample values keyed by {:?} but coalition is {coalition:?}",
                values.keys().collect::<Vec<_>>()
            )));
        }
        if values.values().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample utilities must be finite"));
        }
        Ok(LabeledSample { coalition, values })
    }

    pub fn coalition(&self) -> &Coalition {
        &self.coalition
    }

    pub fn values(&self) -> &BTreeMap<PlayerId, f64> {
        &self.values
    }

    pub fn value(&self, player: PlayerId) -> Option<f64> {
        self.values.get(&player).copied()
    }

    /// Applies `f(player, value)` to every utility.
    pub fn map_values(&self, mut f: impl FnMut(PlayerId, f64) -> f64) -> Self {
        LabeledSample {
            coalition: self.coalition.clone(),
            values: self.values.iter().map(|(&p, &v)| (p, f(p, v))).collect(),
        }
    }
}

/// Queries the oracle for each member of each coalition.
pub fn labeled_samples(game: &HedonicGame, coalitions: &[Coalition]) -> Result<Vec<LabeledSample>> {
    coalitions
        .iter()
        .map(|c| {
            let values = c
                .iter()
                .map(|i| Ok((i, game.value(i, c)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            LabeledSample::new(c.clone(), values)
        })
        .collect()
}

/// Decodes a Prüfer sequence (entries in `0..n`, length `n - 2`) into the
/// edges of a labeled tree on `n >= 2` vertices.
pub fn prufer_decode(sequence: &[PlayerId], n: usize) -> Result<Vec<(PlayerId, PlayerId)>> {
    if n < 2 || sequence.len() != n - 2 {
        return Err(Error::invalid("Prüfer sequence must have length n - 2 with n >= 2"));
    }
    let mut degree = vec![1usize; n];
    for &x in sequence {
        if x >= n {
            return Err(Error::PlayerOutOfRange { player: x, n });
        }
        degree[x] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in sequence {
        let Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.push(Reverse(x));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a.min(b), a.max(b)));
    Ok(edges)
}

/// A uniformly random labeled tree on `n` vertices.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> InteractionGraph {
    if n < 2 {
        return InteractionGraph::edgeless(n);
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let edges = prufer_decode(&seq, n).expect("valid sequence");
    InteractionGraph::new(n, edges).expect("tree edges are valid")
}

/// A random tree with each edge kept independently with `keep_probability`.
pub fn random_forest<R: Rng + ?Sized>(n: usize, keep_probability: f64, rng: &mut R) -> InteractionGraph {
    let tree = random_tree(n, rng);
    let kept: Vec<_> = tree.edges().filter(|_| rng.gen::<f64>() < keep_probability).collect();
    InteractionGraph::new(n, kept).expect("subset of tree edges")
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    Explicit(InteractionGraph),
    RandomTree,
    RandomForest { keep_probability: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum UtilityScheme {
    Hash,
    Table(UtilityTable),
}

/// Everything needed to rebuild the same random game.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomGameSpec {
    pub n: usize,
    pub graph: GraphSource,
    pub utilities: UtilityScheme,
    pub seed: u64,
}

impl RandomGameSpec {
    pub fn hashed_tree(n: usize, seed: u64) -> Self {
        RandomGameSpec {
            n,
            graph: GraphSource::RandomTree,
            utilities: UtilityScheme::Hash,
            seed,
        }
    }

    pub fn build(&self) -> Result<HedonicGame> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0));
        let graph = match &self.graph {
            GraphSource::Explicit(g) => {
                if g.n() != self.n {
                    return Err(Error::invalid("explicit graph size differs from n"));
                }
                g.clone()
            }
            GraphSource::RandomTree => random_tree(self.n, &mut rng),
            GraphSource::RandomForest { keep_probability } => random_forest(self.n, *keep_probability, &mut rng),
        };
        let oracle = match &self.utilities {
            UtilityScheme::Hash => UtilityOracle::Hashed(HashValuation::new(derive_seed(self.seed, 1))),
            UtilityScheme::Table(t) => UtilityOracle::Table(t.clone()),
        };
        HedonicGame::new(graph, oracle)
    }
}
