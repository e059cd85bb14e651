//! PAC stabilization of forest-restricted hedonic games.
//!
//! Nodes of the rooted forest are processed bottom-up. Each node `i` picks
//! a guaranteed coalition `B_i`: its favourite sampled coalition inside its
//! subtree that every other member weakly prefers to their own guaranteed
//! coalition (the singleton `{i}` is always available). The partition is
//! then assembled top-down from the roots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::CoalitionStructure;
use crate::graph::{Coalition, InteractionGraph, PlayerId};
use crate::inference::{infer_forest, ConnectivitySample};
use crate::sampling::LabeledSample;

/// Accuracy `epsilon in (0, 1]` and confidence `delta in (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    epsilon: f64,
    delta: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PacParams { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn halved(&self) -> Self {
        PacParams {
            epsilon: self.epsilon / 2.0,
            delta: self.delta / 2.0,
        }
    }
}

/// `ceil((n / epsilon) * ln(n / delta))`.
pub fn required_sample_size(n: usize, params: PacParams) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("need at least one player"));
    }
    let n = n as f64;
    Ok(((n / params.epsilon) * (n / params.delta).ln()).ceil() as usize)
}

/// Consistent-learner bound for the class of forests on `n` vertices,
/// `|F_n| <= n^(n-2) 2^(n-1)`:
/// `ceil((1/epsilon) ((n-2) ln n + (n-1) ln 2 + ln(1/delta)))`.
pub fn forest_class_sample_size(n: usize, params: PacParams) -> Result<usize> {
    if n < 2 {
        return Err(Error::invalid("forest class bound needs n >= 2"));
    }
    let nf = n as f64;
    let log_class = (nf - 2.0) * nf.ln() + (nf - 1.0) * std::f64::consts::LN_2;
    Ok(((log_class + (1.0 / params.delta).ln()) / params.epsilon).ceil() as usize)
}

/// A forest with every component rooted at its smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedForest {
    parent: Vec<Option<PlayerId>>,
    children: Vec<Vec<PlayerId>>,
    roots: Vec<PlayerId>,
    height: Vec<usize>,
    depth: Vec<usize>,
    // Preorder entry/exit times: j in desc(i) iff enter[i] <= enter[j] < exit[i].
    enter: Vec<usize>,
    exit: Vec<usize>,
}

impl RootedForest {
    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, i: PlayerId) -> Option<PlayerId> {
        self.parent[i]
    }

    pub fn children(&self, i: PlayerId) -> &[PlayerId] {
        &self.children[i]
    }

    pub fn roots(&self) -> &[PlayerId] {
        &self.roots
    }

    pub fn height(&self, i: PlayerId) -> usize {
        self.height[i]
    }

    pub fn depth(&self, i: PlayerId) -> usize {
        self.depth[i]
    }

    /// Whether `j` is in `desc(i)` (which includes `i`).
    pub fn is_descendant(&self, j: PlayerId, i: PlayerId) -> bool {
        self.enter[i] <= self.enter[j] && self.enter[j] < self.exit[i]
    }

    pub fn descendants(&self, i: PlayerId) -> Vec<PlayerId> {
        (0..self.n()).filter(|&j| self.is_descendant(j, i)).collect()
    }

    /// Vertices outside `s` whose parent lies in `s`.
    pub fn children_of_set(&self, s: &Coalition) -> Vec<PlayerId> {
        s.iter()
            .flat_map(|p| self.children[p].iter().copied())
            .filter(|&c| !s.contains(c))
            .collect()
    }

    /// The member of a connected `s` closest to the root, which is the
    /// member of greatest height.
    pub fn top_node(&self, s: &Coalition) -> Option<PlayerId> {
        s.iter().min_by_key(|&p| (self.depth[p], p))
    }

    /// Nondecreasing height, ties by id.
    pub fn processing_order(&self) -> Vec<PlayerId> {
        let mut order: Vec<_> = (0..self.n()).collect();
        order.sort_by_key(|&i| (self.height[i], i));
        order
    }
}

/// Orients every component away from its smallest vertex.
pub fn root_forest(graph: &InteractionGraph) -> Result<RootedForest> {
    if !graph.is_forest() {
        return Err(Error::NotAForest);
    }
    let n = graph.n();
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut depth = vec![0; n];
    let mut enter = vec![0; n];
    let mut exit = vec![0; n];
    let mut seen = vec![false; n];
    let mut roots = Vec::new();
    let mut preorder = Vec::with_capacity(n);
    let mut clock = 0;
    for r in 0..n {
        if seen[r] {
            continue;
        }
        roots.push(r);
        seen[r] = true;
        // Iterative DFS; (vertex, next neighbour index).
        let mut stack = vec![(r, 0usize)];
        enter[r] = clock;
        clock += 1;
        preorder.push(r);
        while let Some(&mut (u, ref mut k)) = stack.last_mut() {
            if let Some(&w) = graph.neighbors(u).get(*k) {
                *k += 1;
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    children[u].push(w);
                    depth[w] = depth[u] + 1;
                    enter[w] = clock;
                    clock += 1;
                    preorder.push(w);
                    stack.push((w, 0));
                }
            } else {
                exit[u] = clock;
                stack.pop();
            }
        }
    }
    let mut height = vec![0; n];
    for &u in preorder.iter().rev() {
        if let Some(p) = parent[u] {
            height[p] = height[p].max(height[u] + 1);
        }
    }
    Ok(RootedForest {
        parent,
        children,
        roots,
        height,
        depth,
        enter,
        exit,
    })
}

/// Per-node results of the bottom-up pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerState {
    guaranteed: Vec<Option<Coalition>>,
    guaranteed_value: Vec<f64>,
    /// Nodes whose guaranteed coalitions make up `π^(i)`.
    partial: Vec<Vec<PlayerId>>,
}

impl StabilizerState {
    fn new(n: usize) -> Self {
        StabilizerState {
            guaranteed: vec![None; n],
            guaranteed_value: vec![f64::NAN; n],
            partial: vec![Vec::new(); n],
        }
    }

    /// `B_i`, once node `i` has been processed.
    pub fn guaranteed(&self, i: PlayerId) -> Option<&Coalition> {
        self.guaranteed[i].as_ref()
    }

    /// `v_i(B_i)` as observed in the samples.
    pub fn guaranteed_value(&self, i: PlayerId) -> f64 {
        self.guaranteed_value[i]
    }

    pub fn partial(&self, i: PlayerId) -> &[PlayerId] {
        &self.partial[i]
    }
}

/// A coalition admissible as `B_i`, with `v_i` of it.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub coalition: Coalition,
    pub value: f64,
    /// `None` for the singleton.
    pub sample_index: Option<usize>,
}

/// The singleton `{i}` followed by every sampled coalition `S` (in sample
/// order) that is connected, satisfies `i in S ⊆ desc(i)`, and gives every
/// other member `j` at least `v_j(B_j)`.
pub fn candidate_set(
    i: PlayerId,
    graph: &InteractionGraph,
    forest: &RootedForest,
    state: &StabilizerState,
    samples: &[LabeledSample],
) -> Result<Vec<Candidate>> {
    let mut out = vec![Candidate {
        coalition: Coalition::singleton(i),
        value: 0.0,
        sample_index: None,
    }];
    for (k, sample) in samples.iter().enumerate() {
        let s = sample.coalition();
        if s.is_empty() || !s.contains(i) || !s.iter().all(|j| forest.is_descendant(j, i)) {
            continue;
        }
        if !graph.is_connected(s)? {
            continue;
        }
        let mut acceptable = true;
        for (&j, &v) in sample.values() {
            if j == i {
                continue;
            }
            let floor = state
                .guaranteed(j)
                .map(|_| state.guaranteed_value(j))
                .ok_or_else(|| Error::Contradiction(format!("node {j} used before being processed")))?;
            if v < floor {
                acceptable = false;
                break;
            }
        }
        if acceptable {
            out.push(Candidate {
                coalition: s.clone(),
                value: sample.value(i).expect("sample keyed by members"),
                sample_index: Some(k),
            });
        }
    }
    Ok(out)
}

/// Everything produced by one run of the bottom-up pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerRun {
    pub forest: RootedForest,
    pub state: StabilizerState,
    pub partition: CoalitionStructure,
}

/// Runs the algorithm regardless of sample count.
pub fn run_stabilizer(graph: &InteractionGraph, samples: &[LabeledSample]) -> Result<StabilizerRun> {
    let n = graph.n();
    for s in samples {
        for p in s.coalition().iter() {
            graph.check_member(p)?;
        }
    }
    let forest = root_forest(graph)?;
    let mut state = StabilizerState::new(n);
    for i in forest.processing_order() {
        let candidates = candidate_set(i, graph, &forest, &state, samples)?;
        // Singleton is the incumbent; only strict improvements replace it,
        // so the earliest sample wins among equals.
        let mut best = &candidates[0];
        for c in &candidates[1..] {
            if c.value > best.value {
                best = c;
            }
        }
        let b = best.coalition.clone();
        let mut partial = vec![i];
        for j in forest.children_of_set(&b) {
            partial.extend_from_slice(&state.partial[j]);
        }
        debug_assert!(b.contains(i) && b.iter().all(|j| forest.is_descendant(j, i)));
        state.guaranteed_value[i] = best.value;
        state.guaranteed[i] = Some(b);
        state.partial[i] = partial;
    }
    let blocks = forest
        .roots()
        .iter()
        .flat_map(|&r| state.partial[r].iter())
        .map(|&owner| state.guaranteed[owner].clone().expect("processed"))
        .collect();
    let partition = CoalitionStructure::new(n, blocks)?;
    Ok(StabilizerRun {
        forest,
        state,
        partition,
    })
}

/// Stabilizes a game on a known forest from labeled samples. Unless
/// `force` is set, at least [`required_sample_size`] samples are needed.
pub fn pac_stabilize(
    graph: &InteractionGraph,
    samples: &[LabeledSample],
    params: PacParams,
    force: bool,
) -> Result<CoalitionStructure> {
    if !graph.is_forest() {
        return Err(Error::NotAForest);
    }
    let required = required_sample_size(graph.n(), params)?;
    if !force && samples.len() < required {
        return Err(Error::InsufficientSamples {
            required,
            provided: samples.len(),
        });
    }
    Ok(run_stabilizer(graph, samples)?.partition)
}

#[derive(Deserialize, Serialize)]
struct RawStreamSample {
    coalition: Coalition,
    values: BTreeMap<PlayerId, f64>,
    connected: bool,
}

/// A labeled sample plus whether it is connected in the (hidden) graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStreamSample", into = "RawStreamSample")]
pub struct StreamSample {
    pub sample: LabeledSample,
    pub connected: bool,
}

impl TryFrom<RawStreamSample> for StreamSample {
    type Error = Error;

    fn try_from(raw: RawStreamSample) -> Result<Self> {
        Ok(StreamSample {
            sample: LabeledSample::new(raw.coalition, raw.values)?,
            connected: raw.connected,
        })
    }
}

impl From<StreamSample> for RawStreamSample {
    fn from(s: StreamSample) -> Self {
        RawStreamSample {
            coalition: s.sample.coalition().clone(),
            values: s.sample.values().clone(),
            connected: s.connected,
        }
    }
}

/// Stream lengths consumed by [`pac_stabilize_unknown_forest`].
pub fn unknown_forest_phase_sizes(n: usize, params: PacParams) -> Result<(usize, usize)> {
    let half = params.halved();
    Ok((forest_class_sample_size(n, half)?, required_sample_size(n, half)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnknownForestOutcome {
    /// The forest inferred from phase one.
    pub inferred: InteractionGraph,
    pub partition: CoalitionStructure,
    /// Phase-two samples that survived the connectivity filter.
    pub phase_two_kept: usize,
}

/// Stabilizes without knowing the forest. Phase one learns a forest from
/// the connected-flagged samples among the first `forest_class_sample_size`
/// draws; phase two stabilizes on it using the next `required_sample_size`
/// draws that are connected in both the true and the learned forest. Both
/// phases run at `epsilon/2`, `delta/2`.
pub fn pac_stabilize_unknown_forest(
    stream: &[StreamSample],
    n: usize,
    params: PacParams,
) -> Result<UnknownForestOutcome> {
    for s in stream {
        for p in s.sample.coalition().iter() {
            if p >= n {
                return Err(Error::PlayerOutOfRange { player: p, n });
            }
        }
    }
    if n <= 1 {
        return Ok(UnknownForestOutcome {
            inferred: InteractionGraph::edgeless(n),
            partition: CoalitionStructure::singletons(n),
            phase_two_kept: 0,
        });
    }
    let (m1, m2) = unknown_forest_phase_sizes(n, params)?;
    if stream.len() < m1 + m2 {
        return Err(Error::InsufficientSamples {
            required: m1 + m2,
            provided: stream.len(),
        });
    }
    let (phase_one, phase_two) = stream.split_at(m1);
    let positives = phase_one
        .iter()
        .filter(|s| s.connected && !s.sample.coalition().is_empty())
        .map(|s| ConnectivitySample::connected(s.sample.coalition().iter()))
        .collect::<Result<Vec<_>>>()?;
    let inferred = infer_forest(&positives, n)?.ok_or(Error::InferenceFailed)?;
    let mut kept = Vec::new();
    for s in &phase_two[..m2] {
        let c = s.sample.coalition();
        if s.connected && !c.is_empty() && inferred.is_connected(c)? {
            kept.push(s.sample.clone());
        }
    }
    let partition = pac_stabilize(&inferred, &kept, params.halved(), true)?;
    Ok(UnknownForestOutcome {
        inferred,
        partition,
        phase_two_kept: kept.len(),
    })
}
