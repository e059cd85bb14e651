//! Two games on a cycle that agree on every sample from `D` (uniform on
//! `S_1 = {0,1}`, `S_2 = {1,2}`, `S_3 = {2,..,k-1,0}`) yet have disjoint
//! sets of 1/3-stable partitions.
//!
//! Player `p` in `{0,1,2}` lies in `S_{p+1}` ("front") and `S_p` ("back",
//! with `S_0 = S_3`) and ranks front above back in both games.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{
    blocking_probability, for_each_connected_partition, mask_to_coalition, CoalitionStructure, HedonicGame,
    UtilityOracle, UtilityTable,
};
use crate::graph::{Coalition, InteractionGraph, PlayerId};
use crate::sampling::CoalitionDistribution;

const DISCONNECTED: f64 = -10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CycleCounterexample {
    pub k: usize,
    pub graph: InteractionGraph,
    /// Players 0, 1, 2 rank their singleton first.
    pub gamma1: HedonicGame,
    /// Everyone ranks the whole cycle first.
    pub gamma2: HedonicGame,
    pub distribution: CoalitionDistribution,
    /// `[S_1, S_2, S_3]`.
    pub sets: [Coalition; 3],
    pub cycle: Coalition,
}

impl CycleCounterexample {
    pub fn front(&self, p: PlayerId) -> &Coalition {
        &self.sets[p]
    }

    pub fn back(&self, p: PlayerId) -> &Coalition {
        &self.sets[(p + 2) % 3]
    }
}

/// Every connected vertex set of the `k`-cycle: the proper arcs plus the
/// whole cycle.
fn arcs(k: usize) -> Vec<Coalition> {
    let mut out: Vec<Coalition> = (0..k)
        .flat_map(|start| (1..k).map(move |len| Coalition::from((0..len).map(|d| (start + d) % k).collect::<Vec<_>>())))
        .collect();
    out.push(Coalition::from((0..k).collect::<Vec<_>>()));
    out.sort();
    out.dedup();
    out
}

pub fn build_cycle_counterexample(k: usize) -> Result<CycleCounterexample> {
    if k < 3 {
        return Err(Error::invalid(format!("a cycle needs k >= 3, got {k}")));
    }
    let graph = InteractionGraph::cycle(k)?;
    let s1 = Coalition::from(vec![0, 1]);
    let s2 = Coalition::from(vec![1, 2]);
    let s3 = Coalition::from([2].into_iter().chain(3..k).chain([0]).collect::<Vec<_>>());
    let sets = [s1, s2, s3];
    let cycle = Coalition::from((0..k).collect::<Vec<_>>());
    let front = |p: PlayerId| &sets[p];
    let back = |p: PlayerId| &sets[(p + 2) % 3];

    let mut t1 = UtilityTable::new(-3.0, DISCONNECTED)?;
    let mut t2 = UtilityTable::new(-1.0, DISCONNECTED)?;
    for s in arcs(k) {
        if s.len() == 1 {
            continue;
        }
        for p in s.iter() {
            let (v1, v2) = if p < 3 {
                let v1 = if &s == front(p) {
                    -1.0
                } else if &s == back(p) {
                    -2.0
                } else {
                    -3.0
                };
                let v2 = if s == cycle {
                    2.0
                } else if &s == front(p) {
                    1.0
                } else if &s == back(p) {
                    0.5
                } else {
                    -1.0
                };
                (v1, v2)
            } else {
                let v1 = if s == sets[2] { 1.0 } else { -1.0 };
                let v2 = if s == cycle {
                    2.0
                } else if s == sets[2] {
                    1.0
                } else {
                    -1.0
                };
                (v1, v2)
            };
            t1.set(&s, p, v1)?;
            t2.set(&s, p, v2)?;
        }
    }
    let gamma1 = HedonicGame::new(graph.clone(), UtilityOracle::Table(t1))?;
    let gamma2 = HedonicGame::new(graph.clone(), UtilityOracle::Table(t2))?;
    let distribution = CoalitionDistribution::uniform(sets.to_vec())?;
    Ok(CycleCounterexample {
        k,
        graph,
        gamma1,
        gamma2,
        distribution,
        sets,
        cycle,
    })
}

pub const CYCLE_ENUMERATION_LIMIT: usize = 6;

/// Outcome of comparing the 1/3-stable partitions of both games.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleStabilityReport {
    pub k: usize,
    pub partitions: usize,
    /// Partitions with blocking probability below 1/3 in the first game.
    pub stable_first: Vec<CoalitionStructure>,
    pub stable_second: Vec<CoalitionStructure>,
    pub overlap: Vec<CoalitionStructure>,
    /// Every member of `stable_first` has `{0}`, `{1}` or `{2}` as a block.
    pub first_has_singleton: bool,
    /// Every member of `stable_second` has the whole cycle as a block.
    pub second_has_cycle: bool,
    pub disjoint: bool,
}

/// Enumerates every partition of the `k`-cycle into connected blocks and
/// checks that both games have 1/3-stable partitions and share none.
pub fn stable_sets_disjoint(k: usize) -> Result<CycleStabilityReport> {
    if k > CYCLE_ENUMERATION_LIMIT {
        return Err(Error::Capacity {
            what: "cycle partition enumeration",
            limit: CYCLE_ENUMERATION_LIMIT,
            got: k,
        });
    }
    let ce = build_cycle_counterexample(k)?;
    let mut all = Vec::new();
    for_each_connected_partition(&ce.graph, |blocks| {
        all.push(blocks.to_vec());
        ControlFlow::Continue(())
    })?;
    let threshold = 1.0 / 3.0 - 1e-12;
    let mut stable_first = Vec::new();
    let mut stable_second = Vec::new();
    let mut overlap = Vec::new();
    for blocks in &all {
        let pi = CoalitionStructure::new(k, blocks.iter().map(|&m| mask_to_coalition(m)).collect())?;
        let a = blocking_probability(&ce.gamma1, &pi, &ce.distribution)? < threshold;
        let b = blocking_probability(&ce.gamma2, &pi, &ce.distribution)? < threshold;
        if a && b {
            overlap.push(pi.clone());
        }
        if a {
            stable_first.push(pi.clone());
        }
        if b {
            stable_second.push(pi);
        }
    }
    let first_has_singleton = stable_first
        .iter()
        .all(|pi| (0..3).any(|p| pi.contains_block(&Coalition::singleton(p))));
    let second_has_cycle = stable_second.iter().all(|pi| pi.contains_block(&ce.cycle));
    let disjoint = !stable_first.is_empty() && !stable_second.is_empty() && overlap.is_empty();
    Ok(CycleStabilityReport {
        k,
        partitions: all.len(),
        stable_first,
        stable_second,
        overlap,
        first_has_singleton,
        second_has_cycle,
        disjoint,
    })
}
