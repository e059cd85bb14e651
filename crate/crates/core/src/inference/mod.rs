//! Forests consistent with connectivity samples.
//!
//! With connected samples only, a host forest exists iff the maximum-weight
//! spanning forest of the co-occurrence graph has weight `Σ (|S_j| - 1)`:
//! a connected `S` spans exactly `|S| - 1` edges of any forest it is
//! connected in, and at most that many in any other forest. Mixed labels
//! are handled by exhaustive search (tiny `n`) or by a pruned Hamiltonian
//! path search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Coalition, InteractionGraph, PlayerId};

mod path;

pub use path::{backtrack_consistent_path, bruteforce_consistent_path, BRUTEFORCE_PATH_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Disconnected,
    Connected,
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Disconnected),
            1 => Ok(Label::Connected),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::Disconnected => 0,
            Label::Connected => 1,
        }
    }
}

impl From<bool> for Label {
    fn from(connected: bool) -> Self {
        if connected {
            Label::Connected
        } else {
            Label::Disconnected
        }
    }
}

#[derive(Deserialize, Serialize)]
struct RawConnectivitySample {
    vertices: Coalition,
    label: Label,
}

/// A vertex set labeled connected or disconnected.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConnectivitySample", into = "RawConnectivitySample")]
pub struct ConnectivitySample {
    vertices: Coalition,
    label: Label,
}

impl TryFrom<RawConnectivitySample> for ConnectivitySample {
    type Error = Error;

    fn try_from(raw: RawConnectivitySample) -> Result<Self> {
        ConnectivitySample::new(raw.vertices, raw.label)
    }
}

impl From<ConnectivitySample> for RawConnectivitySample {
    fn from(s: ConnectivitySample) -> Self {
        RawConnectivitySample {
            vertices: s.vertices,
            label: s.label,
        }
    }
}

impl ConnectivitySample {
    pub fn new(vertices: Coalition, label: Label) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::invalid("connectivity samples must be nonempty"));
        }
        if vertices.len() == 1 && label == Label::Disconnected {
            return Err(Error::invalid(format!(
                "singleton {vertices:?} cannot be labeled disconnected"
            )));
        }
        Ok(ConnectivitySample { vertices, label })
    }

    pub fn connected(vertices: impl IntoIterator<Item = PlayerId>) -> Result<Self> {
        Self::new(Coalition::new(vertices)?, Label::Connected)
    }

    pub fn disconnected(vertices: impl IntoIterator<Item = PlayerId>) -> Result<Self> {
        Self::new(Coalition::new(vertices)?, Label::Disconnected)
    }

    pub fn vertices(&self) -> &Coalition {
        &self.vertices
    }

    pub fn label(&self) -> Label {
        self.label
    }
}

/// Pair weights: how many connected samples contain both endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CooccurrenceGraph {
    n: usize,
    weights: BTreeMap<(PlayerId, PlayerId), u64>,
}

impl CooccurrenceGraph {
    pub fn build(samples: &[ConnectivitySample], n: usize) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for s in samples {
            let members = s.vertices.members();
            if let Some(&last) = members.last() {
                if last >= n {
                    return Err(Error::PlayerOutOfRange { player: last, n });
                }
            }
            for (a, &u) in members.iter().enumerate() {
                for &v in &members[a + 1..] {
                    *weights.entry((u, v)).or_insert(0) += 1;
                }
            }
        }
        Ok(CooccurrenceGraph { n, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, u: PlayerId, v: PlayerId) -> u64 {
        self.weights.get(&(u.min(v), u.max(v))).copied().unwrap_or(0)
    }

    /// Kruskal on strictly positive weights, heaviest first, ties broken by
    /// lexicographic edge order. Returns the edges and their total weight.
    pub fn max_spanning_forest(&self) -> (Vec<(PlayerId, PlayerId)>, u64) {
        let mut edges: Vec<_> = self.weights.iter().filter(|(_, &w)| w > 0).collect();
        edges.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let mut dsu = DisjointSets::new(self.n);
        let mut chosen = Vec::new();
        let mut total = 0;
        for (&(u, v), &w) in edges {
            if dsu.union(u, v) {
                chosen.push((u, v));
                total += w;
            }
        }
        chosen.sort_unstable();
        (chosen, total)
    }
}

/// Union by size with path halving.
#[derive(Clone, Debug)]
struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if already in the same set.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// A forest in which every (connected-labeled) sample is connected, or
/// `None` if no forest on `n` vertices connects them all.
pub fn infer_forest(samples: &[ConnectivitySample], n: usize) -> Result<Option<InteractionGraph>> {
    if let Some(bad) = samples.iter().find(|s| s.label == Label::Disconnected) {
        return Err(Error::invalid(format!(
            "infer_forest takes connected samples only; {:?} is labeled disconnected",
            bad.vertices
        )));
    }
    let cooc = CooccurrenceGraph::build(samples, n)?;
    let target: u64 = samples.iter().map(|s| s.vertices.len() as u64 - 1).sum();
    let (edges, total) = cooc.max_spanning_forest();
    if total != target {
        return Ok(None);
    }
    let forest = InteractionGraph::new(n, edges)?;
    if !check_consistency(&forest, samples)? {
        return Err(Error::Contradiction(
            "spanning forest reached the weight bound but fails a sample".into(),
        ));
    }
    Ok(Some(forest))
}

/// True iff each sample's connectivity in `graph` matches its label.
pub fn check_consistency(graph: &InteractionGraph, samples: &[ConnectivitySample]) -> Result<bool> {
    for s in samples {
        if graph.is_connected(&s.vertices)? != (s.label == Label::Connected) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub const BRUTEFORCE_FOREST_LIMIT: usize = 7;

/// Exhaustive search over all forests on `n <= 7` vertices, in order of
/// increasing edge-subset (lexicographic include/exclude over `K_n` edges).
pub fn bruteforce_consistent_forest(samples: &[ConnectivitySample], n: usize) -> Result<Option<InteractionGraph>> {
    if n > BRUTEFORCE_FOREST_LIMIT {
        return Err(Error::Capacity {
            what: "brute-force forest vertex count",
            limit: BRUTEFORCE_FOREST_LIMIT,
            got: n,
        });
    }
    for s in samples {
        for p in s.vertices.iter() {
            if p >= n {
                return Err(Error::PlayerOutOfRange { player: p, n });
            }
        }
    }
    let all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();

    fn rec(
        k: usize,
        all: &[(usize, usize)],
        chosen: &mut Vec<(usize, usize)>,
        dsu: &DisjointSets,
        n: usize,
        samples: &[ConnectivitySample],
    ) -> Result<Option<InteractionGraph>> {
        if k == all.len() {
            let g = InteractionGraph::new(n, chosen.iter().copied())?;
            return Ok(check_consistency(&g, samples)?.then_some(g));
        }
        if let Some(g) = rec(k + 1, all, chosen, dsu, n, samples)? {
            return Ok(Some(g));
        }
        let (u, v) = all[k];
        let mut next = dsu.clone();
        if next.union(u, v) {
            chosen.push((u, v));
            let found = rec(k + 1, all, chosen, &next, n, samples)?;
            chosen.pop();
            return Ok(found);
        }
        Ok(None)
    }
    rec(0, &all, &mut Vec::new(), &DisjointSets::new(n), n, samples)
}

/// Outcome of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathSearch {
    Found(Vec<PlayerId>),
    Absent,
    /// The time budget ran out before the search finished.
    Unknown,
}

/// The path graph visiting `ordering` in sequence (vertex ids unchanged).
pub fn path_graph(ordering: &[PlayerId]) -> Result<InteractionGraph> {
    InteractionGraph::new(ordering.len(), ordering.windows(2).map(|w| (w[0], w[1])))
}
