//! Graph-restricted hedonic games: utility oracles, coalition structures,
//! strong blocking and brute-force core search.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coalition, InteractionGraph, PlayerId};
use crate::sampling::{CoalitionDistribution, HashValuation};

/// Explicit utilities for a finite list of coalitions, with one default for
/// unlisted connected coalitions and one (negative) default for unlisted
/// disconnected coalitions. Singletons are always worth 0.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    entries: HashMap<Coalition, BTreeMap<PlayerId, f64>>,
    default_connected: f64,
    default_disconnected: f64,
}

impl UtilityTable {
    pub fn new(default_connected: f64, default_disconnected: f64) -> Result<Self> {
        if !default_connected.is_finite() || !default_disconnected.is_finite() {
            return Err(Error::invalid("utility defaults must be finite"));
        }
        if default_disconnected >= 0.0 {
            return Err(Error::invalid(format!(
                "default_disconnected must be negative, got {default_disconnected}"
            )));
        }
        Ok(UtilityTable {
            entries: HashMap::new(),
            default_connected,
            default_disconnected,
        })
    }

    /// Sets `v_player(coalition) = value`. Contract checks against a graph
    /// happen in [`HedonicGame::new`].
    pub fn set(&mut self, coalition: &Coalition, player: PlayerId, value: f64) -> Result<()> {
        if coalition.is_empty() {
            return Err(Error::invalid("the empty coalition carries no utilities"));
        }
        if !coalition.contains(player) {
            return Err(Error::NotAMember {
                player,
                coalition: coalition.members().to_vec(),
            });
        }
        if !value.is_finite() {
            return Err(Error::invalid("utilities must be finite"));
        }
        self.entries.entry(coalition.clone()).or_default().insert(player, value);
        Ok(())
    }

    pub fn default_connected(&self) -> f64 {
        self.default_connected
    }

    pub fn default_disconnected(&self) -> f64 {
        self.default_disconnected
    }

    pub fn get(&self, coalition: &Coalition, player: PlayerId) -> Option<f64> {
        self.entries.get(coalition)?.get(&player).copied()
    }

    /// Entries sorted by coalition.
    pub fn entries(&self) -> Vec<(&Coalition, &BTreeMap<PlayerId, f64>)> {
        let mut out: Vec<_> = self.entries.iter().collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }
}

/// Where utilities come from.
#[derive(Clone, Debug, PartialEq)]
pub enum UtilityOracle {
    Table(UtilityTable),
    Hashed(HashValuation),
}

/// A hedonic game on an interaction graph whose utilities satisfy
/// `v_i({i}) = 0` and `v_i(S) < 0` for every disconnected `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct HedonicGame {
    graph: InteractionGraph,
    oracle: UtilityOracle,
}

impl HedonicGame {
    pub fn new(graph: InteractionGraph, oracle: UtilityOracle) -> Result<Self> {
        if let UtilityOracle::Table(table) = &oracle {
            for (coalition, values) in &table.entries {
                for p in coalition.iter() {
                    graph.check_member(p)?;
                }
                let connected = graph.is_connected(coalition)?;
                for (&player, &value) in values {
                    if coalition.len() == 1 && value != 0.0 {
                        return Err(Error::invalid(format!(
                            "v_{player}({{{player}}}) must be 0, got {value}"
                        )));
                    }
                    if !connected && value >= 0.0 {
                        return Err(Error::invalid(format!(
                            "v_{player}({coalition:?}) = {value} but disconnected coalitions must be negative"
                        )));
                    }
                }
            }
        }
        Ok(HedonicGame { graph, oracle })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn oracle(&self) -> &UtilityOracle {
        &self.oracle
    }

    /// `v_player(coalition)`; the player must belong to the coalition.
    pub fn value(&self, player: PlayerId, coalition: &Coalition) -> Result<f64> {
        self.graph.check_member(player)?;
        if !coalition.contains(player) {
            return Err(Error::NotAMember {
                player,
                coalition: coalition.members().to_vec(),
            });
        }
        if coalition.len() == 1 {
            return Ok(0.0);
        }
        match &self.oracle {
            UtilityOracle::Table(table) => {
                if let Some(v) = table.get(coalition, player) {
                    return Ok(v);
                }
                Ok(if self.graph.is_connected(coalition)? {
                    table.default_connected
                } else {
                    table.default_disconnected
                })
            }
            UtilityOracle::Hashed(h) => {
                let u = h.unit(player, coalition);
                Ok(if self.graph.is_connected(coalition)? {
                    u
                } else {
                    -1.0 - u
                })
            }
        }
    }
}

/// A partition of `0..n` into nonempty coalitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CoalitionStructure {
    blocks: Vec<Coalition>,
    #[serde(skip)]
    index: Vec<usize>,
}

impl CoalitionStructure {
    /// Validates that `blocks` partition `0..n` exactly. Blocks are stored
    /// ordered by their smallest member.
    pub fn new(n: usize, blocks: Vec<Coalition>) -> Result<Self> {
        let mut blocks = blocks;
        blocks.sort();
        let mut index = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid("partition blocks must be nonempty"));
            }
            for p in block.iter() {
                if p >= n {
                    return Err(Error::PlayerOutOfRange { player: p, n });
                }
                if index[p] != usize::MAX {
                    return Err(Error::invalid(format!("player {p} appears in two blocks")));
                }
                index[p] = b;
            }
        }
        if let Some(p) = index.iter().position(|&b| b == usize::MAX) {
            return Err(Error::invalid(format!("player {p} is not covered by the partition")));
        }
        Ok(CoalitionStructure { blocks, index })
    }

    pub fn singletons(n: usize) -> Self {
        CoalitionStructure {
            blocks: (0..n).map(Coalition::singleton).collect(),
            index: (0..n).collect(),
        }
    }

    pub fn grand(n: usize) -> Self {
        Self::new(n, vec![Coalition::from((0..n).collect::<Vec<_>>())]).expect("grand coalition")
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    /// `π(i)`.
    pub fn block_of(&self, player: PlayerId) -> &Coalition {
        &self.blocks[self.index[player]]
    }

    pub fn contains_block(&self, block: &Coalition) -> bool {
        self.blocks.binary_search(block).is_ok()
    }

    pub fn all_blocks_connected(&self, graph: &InteractionGraph) -> Result<bool> {
        for b in &self.blocks {
            if !graph.is_connected(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// True iff every member of `s` strictly prefers `s` to its block in `pi`.
/// The empty sentinel never blocks.
pub fn strongly_blocks(game: &HedonicGame, s: &Coalition, pi: &CoalitionStructure) -> Result<bool> {
    if s.is_empty() {
        return Ok(false);
    }
    check_partition_size(game, pi)?;
    for i in s.iter() {
        if game.value(i, s)? <= game.value(i, pi.block_of(i))? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_partition_size(game: &HedonicGame, pi: &CoalitionStructure) -> Result<()> {
    if pi.n() != game.n() {
        return Err(Error::invalid(format!(
            "partition covers {} players but the game has {}",
            pi.n(),
            game.n()
        )));
    }
    Ok(())
}

/// Support coalitions of `dist` that strongly block `pi`, with their
/// probabilities, in support order.
pub fn blocking_support(
    game: &HedonicGame,
    pi: &CoalitionStructure,
    dist: &CoalitionDistribution,
) -> Result<Vec<(Coalition, f64)>> {
    let support = dist.support().ok_or(Error::GenerativeDistribution)?;
    let mut out = Vec::new();
    for (s, p) in support {
        if strongly_blocks(game, s, pi)? {
            out.push((s.clone(), p));
        }
    }
    Ok(out)
}

/// `Pr_{S~D}[S strongly blocks pi]` for a finite-support distribution.
pub fn blocking_probability(game: &HedonicGame, pi: &CoalitionStructure, dist: &CoalitionDistribution) -> Result<f64> {
    Ok(blocking_support(game, pi, dist)?
        .iter()
        .fold(0.0, |acc, (_, p)| acc + p))
}

pub const CORE_SEARCH_LIMIT: usize = 12;

/// All nonempty connected vertex sets as bitmasks, ascending.
pub fn connected_masks(graph: &InteractionGraph) -> Result<Vec<u64>> {
    let n = graph.n();
    if n > 20 {
        return Err(Error::Capacity {
            what: "connected-set enumeration",
            limit: 20,
            got: n,
        });
    }
    let nbr: Vec<u64> = (0..n)
        .map(|u| graph.neighbors(u).iter().fold(0u64, |m, &v| m | 1 << v))
        .collect();
    Ok((1u64..1 << n).filter(|&m| mask_connected(m, &nbr)).collect())
}

fn mask_connected(mask: u64, nbr: &[u64]) -> bool {
    let mut reached = mask & mask.wrapping_neg();
    loop {
        let mut grown = reached;
        let mut rest = reached;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            grown |= nbr[v] & mask;
        }
        if grown == reached {
            return reached == mask;
        }
        reached = grown;
    }
}

pub(crate) fn mask_to_coalition(mask: u64) -> Coalition {
    Coalition::from_mask(mask as u128)
}

/// Visits every partition of the players into connected blocks. Blocks are
/// passed as bitmasks, each block's lowest member increasing.
pub fn for_each_connected_partition<F>(graph: &InteractionGraph, mut visit: F) -> Result<()>
where
    F: FnMut(&[u64]) -> ControlFlow<()>,
{
    let n = graph.n();
    let masks = connected_masks(graph)?;
    let mut by_low: Vec<Vec<u64>> = vec![Vec::new(); n];
    for m in masks {
        by_low[m.trailing_zeros() as usize].push(m);
    }
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let mut stack = Vec::new();
    fn rec<F: FnMut(&[u64]) -> ControlFlow<()>>(
        remaining: u64,
        by_low: &[Vec<u64>],
        stack: &mut Vec<u64>,
        visit: &mut F,
    ) -> ControlFlow<()> {
        if remaining == 0 {
            return visit(stack);
        }
        let low = remaining.trailing_zeros() as usize;
        for &m in &by_low[low] {
            if m & !remaining == 0 {
                stack.push(m);
                rec(remaining & !m, by_low, stack, visit)?;
                stack.pop();
            }
        }
        ControlFlow::Continue(())
    }
    let _ = rec(full, &by_low, &mut stack, &mut visit);
    Ok(())
}

/// Exhaustive core search over partitions into connected coalitions,
/// checked against every connected coalition. Returns the first stable
/// partition in enumeration order, or `None` when the core is empty.
pub fn find_core_bruteforce(game: &HedonicGame) -> Result<Option<CoalitionStructure>> {
    let n = game.n();
    if n > CORE_SEARCH_LIMIT {
        return Err(Error::Capacity {
            what: "core search player count",
            limit: CORE_SEARCH_LIMIT,
            got: n,
        });
    }
    let masks = connected_masks(game.graph())?;
    let mut values: HashMap<u64, Vec<f64>> = HashMap::with_capacity(masks.len());
    for &m in &masks {
        let c = mask_to_coalition(m);
        let mut row = vec![f64::NAN; n];
        for i in c.iter() {
            row[i] = game.value(i, &c)?;
        }
        values.insert(m, row);
    }
    let mut found = None;
    let mut current = vec![0.0; n];
    for_each_connected_partition(game.graph(), |blocks| {
        for &b in blocks {
            let row = &values[&b];
            let mut rest = b;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                current[i] = row[i];
            }
        }
        let blocked = masks.iter().any(|s| {
            let row = &values[s];
            let mut rest = *s;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if row[i] <= current[i] {
                    return false;
                }
            }
            true
        });
        if blocked {
            ControlFlow::Continue(())
        } else {
            found = Some(blocks.to_vec());
            ControlFlow::Break(())
        }
    })?;
    found
        .map(|blocks| CoalitionStructure::new(n, blocks.into_iter().map(mask_to_coalition).collect()))
        .transpose()
}
