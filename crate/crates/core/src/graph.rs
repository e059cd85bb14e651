//! Players, coalitions and the interaction graph that decides which
//! coalitions are feasible.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based player index.
pub type PlayerId = usize;

/// A set of players in canonical (sorted, duplicate-free) form.
///
/// The empty coalition is a sentinel: it never blocks, carries no
/// utilities and is never placed in a [`CoalitionStructure`](crate::game::CoalitionStructure).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<PlayerId>", into = "Vec<PlayerId>")]
pub struct Coalition(Vec<PlayerId>);

impl Coalition {
    /// Builds a nonempty coalition; members are sorted and deduplicated.
    pub fn new(members: impl IntoIterator<Item = PlayerId>) -> Result<Self> {
        let c = Self::normalized(members.into_iter().collect());
        if c.0.is_empty() {
            return Err(Error::invalid("coalition must be nonempty"));
        }
        Ok(c)
    }

    pub fn singleton(player: PlayerId) -> Self {
        Coalition(vec![player])
    }

    /// The empty sentinel.
    pub fn empty() -> Self {
        Coalition(Vec::new())
    }

    fn normalized(mut members: Vec<PlayerId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Coalition(members)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn members(&self) -> &[PlayerId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, player: PlayerId) -> bool {
        self.0.binary_search(&player).is_ok()
    }

    pub fn is_subset_of(&self, other: &Coalition) -> bool {
        self.0.iter().all(|&p| other.contains(p))
    }

    pub fn max_member(&self) -> Option<PlayerId> {
        self.0.last().copied()
    }

    /// Bitmask form, for graphs with at most 128 players.
    pub fn to_mask(&self) -> u128 {
        debug_assert!(self.0.iter().all(|&p| p < 128));
        self.0.iter().fold(0u128, |m, &p| m | (1u128 << p))
    }

    pub fn from_mask(mask: u128) -> Self {
        Coalition((0..128).filter(|&p| mask >> p & 1 == 1).collect())
    }
}

impl From<Vec<PlayerId>> for Coalition {
    fn from(members: Vec<PlayerId>) -> Self {
        Self::normalized(members)
    }
}

impl From<Coalition> for Vec<PlayerId> {
    fn from(c: Coalition) -> Self {
        c.0
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Deserialize, Serialize)]
struct RawGraph {
    n: usize,
    edges: Vec<[PlayerId; 2]>,
}

/// Undirected simple graph over players `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct InteractionGraph {
    n: usize,
    adj: Vec<Vec<PlayerId>>,
}

impl TryFrom<RawGraph> for InteractionGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        InteractionGraph::new(raw.n, raw.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<InteractionGraph> for RawGraph {
    fn from(g: InteractionGraph) -> Self {
        RawGraph {
            n: g.n,
            edges: g.edges().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl InteractionGraph {
    /// Rejects self-loops, duplicate edges and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (PlayerId, PlayerId)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            for p in [u, v] {
                if p >= n {
                    return Err(Error::PlayerOutOfRange { player: p, n });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid(format!("duplicate edge {{{u},{v}}}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(InteractionGraph { n, adj })
    }

    pub fn edgeless(n: usize) -> Self {
        InteractionGraph {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("path edges are valid")
    }

    pub fn star(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (0, i))).expect("star edges are valid")
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::invalid("a cycle needs at least 3 vertices"));
        }
        Self::new(k, (0..k).map(|i| (i, (i + 1) % k)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, u: PlayerId) -> &[PlayerId] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: PlayerId, v: PlayerId) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (PlayerId, PlayerId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn check_member(&self, player: PlayerId) -> Result<()> {
        if player >= self.n {
            Err(Error::PlayerOutOfRange { player, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Whether the subgraph induced by `s` is connected. Singletons and the
    /// empty sentinel count as connected.
    pub fn is_connected(&self, s: &Coalition) -> Result<bool> {
        for p in s.iter() {
            self.check_member(p)?;
        }
        let members = s.members();
        if members.len() <= 1 {
            return Ok(true);
        }
        let mut seen = vec![false; members.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(k) = stack.pop() {
            for &w in &self.adj[members[k]] {
                if let Ok(pos) = members.binary_search(&w) {
                    if !seen[pos] {
                        seen[pos] = true;
                        reached += 1;
                        stack.push(pos);
                    }
                }
            }
        }
        Ok(reached == members.len())
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<PlayerId>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_forest(&self) -> bool {
        self.edge_count() + self.components().len() == self.n
    }
}
