//! Explicit valuations realizing any labeling of feasible coalitions, which
//! witnesses that a player's valuation class pseudo-shatters them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::UtilityTable;
use crate::graph::{Coalition, InteractionGraph, PlayerId};

/// Demand `v_i(coalition) >= threshold` iff `label`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterTarget {
    pub coalition: Coalition,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub label: bool,
}

fn default_threshold() -> f64 {
    1.0
}

impl ShatterTarget {
    pub fn new(coalition: Coalition, label: bool) -> Self {
        ShatterTarget {
            coalition,
            threshold: default_threshold(),
            label,
        }
    }
}

/// Values of player `i` meeting every target: `threshold` on labeled-1
/// coalitions and `threshold - 1.5` on labeled-0 ones. Singletons stay at
/// 0 and unlisted disconnected coalitions default to -1, so the table
/// satisfies the singleton and disconnection contract.
pub fn build_shattering_valuation(
    graph: &InteractionGraph,
    i: PlayerId,
    targets: &[ShatterTarget],
) -> Result<UtilityTable> {
    graph.check_member(i)?;
    let mut table = UtilityTable::new(0.0, -1.0)?;
    let mut seen = BTreeSet::new();
    for t in targets {
        let s = &t.coalition;
        if !s.contains(i) {
            return Err(Error::NotAMember {
                player: i,
                coalition: s.members().to_vec(),
            });
        }
        if !graph.is_connected(s)? {
            return Err(Error::invalid(format!("target {s:?} is not connected")));
        }
        if !t.threshold.is_finite() {
            return Err(Error::invalid("thresholds must be finite"));
        }
        if !seen.insert(s.clone()) {
            return Err(Error::invalid(format!("target {s:?} listed twice")));
        }
        if s.len() == 1 {
            if (0.0 >= t.threshold) != t.label {
                return Err(Error::invalid(format!(
                    "v_{i}({{{i}}}) is pinned to 0, which cannot meet threshold {} with label {}",
                    t.threshold, t.label as u8
                )));
            }
            continue;
        }
        let v = if t.label { t.threshold } else { t.threshold - 1.5 };
        table.set(s, i, v)?;
    }
    Ok(table)
}

/// Whether player `i`'s values in `table` realize every target.
pub fn realizes_labels(table: &UtilityTable, i: PlayerId, targets: &[ShatterTarget]) -> bool {
    targets.iter().all(|t| {
        let v = if t.coalition.len() == 1 {
            0.0
        } else {
            table.get(&t.coalition, i).unwrap_or(table.default_connected())
        };
        (v >= t.threshold) == t.label
    })
}
