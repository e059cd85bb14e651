//! Search for a Hamiltonian path whose induced connectivity matches every
//! labeled sample.
//!
//! Each vertex pair is undecided, an edge, or a non-edge. Decisions are
//! propagated to a fixpoint before branching:
//! - a vertex with two edges loses its other options, and once both path
//!   endpoints are known every other vertex with exactly two options takes
//!   both;
//! - path fragments never close into cycles;
//! - a 3-set is connected iff at least two of its pairs are edges, so a
//!   disconnected triple allows at most one edge and a connected triple
//!   needs two;
//! - larger samples are checked against the decided edges (disconnected
//!   sets) and the still-possible edges (connected sets).
//!
//! Branching picks the open vertex with the fewest undecided pairs and
//! tries its first option as an edge, then as a non-edge.

use std::time::{Duration, Instant};

use super::{ConnectivitySample, Label, PathSearch};
use crate::error::{Error, Result};
use crate::graph::PlayerId;

const UNDECIDED: u8 = 0;
const EDGE: u8 = 1;
const NON_EDGE: u8 = 2;
const INTERIOR: usize = usize::MAX;

struct Constraints {
    n: usize,
    /// Triples as (members, label), indexed per member.
    triples: Vec<([PlayerId; 3], Label)>,
    triples_of: Vec<Vec<usize>>,
    larger: Vec<(Vec<PlayerId>, Label)>,
}

#[derive(Clone)]
struct State {
    pair: Vec<u8>,
    deg: Vec<u8>,
    open: Vec<u32>,
    /// For a fragment endpoint, the fragment's other endpoint (itself when
    /// isolated); `INTERIOR` otherwise.
    end: Vec<usize>,
    edges: usize,
    /// Vertices that can have at most one edge.
    forced_ends: usize,
    pending_pairs: Vec<(PlayerId, PlayerId)>,
    pending_vertices: Vec<PlayerId>,
}

impl State {
    fn new(n: usize) -> Self {
        let mut pair = vec![UNDECIDED; n * n];
        for v in 0..n {
            pair[v * n + v] = NON_EDGE;
        }
        State {
            pair,
            deg: vec![0; n],
            open: vec![n.saturating_sub(1) as u32; n],
            end: (0..n).collect(),
            edges: 0,
            forced_ends: if n == 2 { 2 } else { 0 },
            pending_pairs: Vec::new(),
            pending_vertices: Vec::new(),
        }
    }

    fn get(&self, n: usize, u: PlayerId, v: PlayerId) -> u8 {
        self.pair[u * n + v]
    }

    fn put(&mut self, n: usize, u: PlayerId, v: PlayerId, x: u8) {
        self.pair[u * n + v] = x;
        self.pair[v * n + u] = x;
    }

    fn set_edge(&mut self, c: &Constraints, u: PlayerId, v: PlayerId) -> bool {
        let n = c.n;
        match self.get(n, u, v) {
            EDGE => return true,
            NON_EDGE => return false,
            _ => {}
        }
        if self.deg[u] >= 2 || self.deg[v] >= 2 || self.end[u] == v {
            return false;
        }
        self.put(n, u, v, EDGE);
        self.open[u] -= 1;
        self.open[v] -= 1;
        self.deg[u] += 1;
        self.deg[v] += 1;
        self.edges += 1;
        let (a, b) = (self.end[u], self.end[v]);
        if self.deg[u] == 2 {
            self.end[u] = INTERIOR;
        }
        if self.deg[v] == 2 {
            self.end[v] = INTERIOR;
        }
        self.end[a] = b;
        self.end[b] = a;
        self.pending_pairs.push((u, v));
        self.pending_vertices.extend([u, v, a, b]);
        if self.edges + 1 < n && self.get(n, a, b) == UNDECIDED {
            return self.set_non_edge(c, a, b);
        }
        true
    }

    fn set_non_edge(&mut self, c: &Constraints, u: PlayerId, v: PlayerId) -> bool {
        let n = c.n;
        match self.get(n, u, v) {
            NON_EDGE => return true,
            EDGE => return false,
            _ => {}
        }
        self.put(n, u, v, NON_EDGE);
        for w in [u, v] {
            self.open[w] -= 1;
            let max = self.deg[w] as u32 + self.open[w];
            if max == 0 {
                return false;
            }
            if max == 1 {
                self.forced_ends += 1;
                if self.forced_ends > 2 {
                    return false;
                }
                if self.forced_ends == 2 {
                    self.pending_vertices.extend(0..n);
                }
            }
        }
        self.pending_pairs.push((u, v));
        self.pending_vertices.extend([u, v]);
        true
    }

    fn propagate(&mut self, c: &Constraints) -> bool {
        let n = c.n;
        loop {
            if let Some((u, v)) = self.pending_pairs.pop() {
                let is_edge = self.get(n, u, v) == EDGE;
                for &t in &c.triples_of[u] {
                    let (m, label) = c.triples[t];
                    if !m.contains(&v) {
                        continue;
                    }
                    let w = m.iter().copied().find(|&x| x != u && x != v).expect("three members");
                    let ok = match (label, is_edge) {
                        (Label::Disconnected, true) => self.set_non_edge(c, u, w) && self.set_non_edge(c, v, w),
                        (Label::Connected, false) => self.set_edge(c, u, w) && self.set_edge(c, v, w),
                        _ => true,
                    };
                    if !ok {
                        return false;
                    }
                }
                continue;
            }
            let Some(v) = self.pending_vertices.pop() else {
                return true;
            };
            if self.open[v] == 0 {
                continue;
            }
            let max = self.deg[v] as u32 + self.open[v];
            let fill = self.deg[v] == 2;
            let take_all = !fill && self.forced_ends == 2 && max == 2;
            if fill || take_all {
                let options: Vec<PlayerId> = (0..n).filter(|&w| self.get(n, v, w) == UNDECIDED).collect();
                for w in options {
                    let ok = if fill {
                        self.set_non_edge(c, v, w)
                    } else {
                        self.set_edge(c, v, w)
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
    }

    /// Checks that cannot be expressed as local rules.
    fn feasible(&self, c: &Constraints) -> bool {
        let n = c.n;
        if !self.spans(n, &(0..n).collect::<Vec<_>>(), |x| x != NON_EDGE) {
            return false;
        }
        c.larger.iter().all(|(members, label)| match label {
            Label::Disconnected => !self.spans(n, members, |x| x == EDGE),
            Label::Connected => self.spans(n, members, |x| x != NON_EDGE),
        })
    }

    /// Whether `members` are connected using pairs whose state passes `keep`.
    fn spans(&self, n: usize, members: &[PlayerId], keep: impl Fn(u8) -> bool) -> bool {
        let mut seen = vec![false; members.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(k) = stack.pop() {
            let u = members[k];
            for (j, &w) in members.iter().enumerate() {
                if !seen[j] && keep(self.get(n, u, w)) {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
        reached == members.len()
    }

    fn ordering(&self, n: usize) -> Vec<PlayerId> {
        let start = (0..n).find(|&v| self.deg[v] <= 1).expect("a path has an endpoint");
        let mut order = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while order.len() < n {
            let next = (0..n)
                .find(|&w| w != prev && self.get(n, cur, w) == EDGE)
                .expect("path continues");
            order.push(next);
            prev = cur;
            cur = next;
        }
        order
    }
}

struct Search<'a> {
    c: &'a Constraints,
    samples: &'a [ConnectivitySample],
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn run(&mut self, mut state: State) -> Option<Vec<PlayerId>> {
        let n = self.c.n;
        loop {
            self.nodes += 1;
            if self.nodes % 1024 == 1 {
                if let Some(d) = self.deadline {
                    if Instant::now() >= d {
                        self.timed_out = true;
                    }
                }
            }
            if self.timed_out || !state.propagate(self.c) || !state.feasible(self.c) {
                return None;
            }
            if state.edges + 1 == n {
                let order = state.ordering(n);
                return realizes(&order, self.samples).then_some(order);
            }
            let v = (0..n)
                .filter(|&v| state.deg[v] < 2 && state.open[v] > 0)
                .min_by_key(|&v| (state.open[v], v))?;
            let w = (0..n).find(|&w| state.get(n, v, w) == UNDECIDED).expect("open pair");
            let mut with_edge = state.clone();
            if with_edge.set_edge(self.c, v, w) {
                if let Some(order) = self.run(with_edge) {
                    return Some(order);
                }
                if self.timed_out {
                    return None;
                }
            }
            if !state.set_non_edge(self.c, v, w) {
                return None;
            }
        }
    }
}

fn realizes(order: &[PlayerId], samples: &[ConnectivitySample]) -> bool {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    samples.iter().all(|s| {
        let (lo, hi) = s
            .vertices()
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), p| (lo.min(pos[p]), hi.max(pos[p])));
        (hi - lo + 1 == s.vertices().len()) == (s.label() == Label::Connected)
    })
}

pub const BRUTEFORCE_PATH_LIMIT: usize = 9;

/// Tries every ordering of `n <= 9` vertices in lexicographic order and
/// returns the first whose path realizes every label.
pub fn bruteforce_consistent_path(samples: &[ConnectivitySample], n: usize) -> Result<Option<Vec<PlayerId>>> {
    if n > BRUTEFORCE_PATH_LIMIT {
        return Err(Error::Capacity {
            what: "brute-force path vertex count",
            limit: BRUTEFORCE_PATH_LIMIT,
            got: n,
        });
    }
    check_range(samples, n)?;
    let mut order: Vec<PlayerId> = (0..n).collect();
    loop {
        if realizes(&order, samples) {
            return Ok(Some(order));
        }
        // Next permutation in lexicographic order.
        let Some(i) = (1..n).rev().find(|&i| order[i - 1] < order[i]) else {
            return Ok(None);
        };
        let j = (i..n)
            .rev()
            .find(|&j| order[j] > order[i - 1])
            .expect("successor exists");
        order.swap(i - 1, j);
        order[i..].reverse();
    }
}

fn check_range(samples: &[ConnectivitySample], n: usize) -> Result<()> {
    for s in samples {
        for p in s.vertices().iter() {
            if p >= n {
                return Err(Error::PlayerOutOfRange { player: p, n });
            }
        }
    }
    Ok(())
}

/// Searches for a vertex ordering whose path graph realizes every label.
/// Returns [`PathSearch::Unknown`] if `timeout` elapses first.
pub fn backtrack_consistent_path(
    samples: &[ConnectivitySample],
    n: usize,
    timeout: Option<Duration>,
) -> Result<PathSearch> {
    check_range(samples, n)?;
    if n <= 1 {
        return Ok(PathSearch::Found((0..n).collect()));
    }
    let mut c = Constraints {
        n,
        triples: Vec::new(),
        triples_of: vec![Vec::new(); n],
        larger: Vec::new(),
    };
    let mut state = State::new(n);
    for s in samples {
        let m = s.vertices().members();
        let ok = match m.len() {
            1 => true,
            2 if s.label() == Label::Connected => state.set_edge(&c, m[0], m[1]),
            2 => state.set_non_edge(&c, m[0], m[1]),
            3 => {
                for &p in m {
                    c.triples_of[p].push(c.triples.len());
                }
                c.triples.push(([m[0], m[1], m[2]], s.label()));
                true
            }
            _ => {
                c.larger.push((m.to_vec(), s.label()));
                true
            }
        };
        if !ok {
            return Ok(PathSearch::Absent);
        }
    }
    // Replay pair decisions now that every triple is indexed.
    state.pending_vertices.extend(0..n);
    let mut search = Search {
        c: &c,
        samples,
        deadline: timeout.map(|t| Instant::now() + t),
        nodes: 0,
        timed_out: false,
    };
    match search.run(state) {
        Some(order) => Ok(PathSearch::Found(order)),
        None if search.timed_out => Ok(PathSearch::Unknown),
        None => Ok(PathSearch::Absent),
    }
}
