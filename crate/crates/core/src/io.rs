//! JSON file formats shared by the command-line tool and tests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::game::{CoalitionStructure, HedonicGame, UtilityOracle, UtilityTable};
use crate::graph::{Coalition, InteractionGraph, PlayerId};
use crate::sampling::{CoalitionDistribution, HashValuation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub coalition: Coalition,
    #[serde(deserialize_with = "player_keyed")]
    pub values: BTreeMap<PlayerId, f64>,
}

// Tagged enums buffer their content, which loses serde_json's integer map
// keys; parse the string keys by hand.
fn player_keyed<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<PlayerId, f64>, D::Error> {
    BTreeMap::<String, f64>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.parse()
                .map(|p| (p, v))
                .map_err(|_| D::Error::custom(format!("player key {k:?} is not an index")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum UtilityFile {
    Table {
        default_connected: f64,
        default_disconnected: f64,
        #[serde(default)]
        entries: Vec<TableEntry>,
    },
    Hashed {
        seed: u64,
    },
}

/// `{"graph": {"n", "edges"}, "utilities": {"type": "table" | "hashed", ...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub graph: InteractionGraph,
    pub utilities: UtilityFile,
}

impl GameFile {
    pub fn from_game(game: &HedonicGame) -> Self {
        let utilities = match game.oracle() {
            UtilityOracle::Table(t) => UtilityFile::Table {
                default_connected: t.default_connected(),
                default_disconnected: t.default_disconnected(),
                entries: t
                    .entries()
                    .into_iter()
                    .map(|(c, v)| TableEntry {
                        coalition: c.clone(),
                        values: v.clone(),
                    })
                    .collect(),
            },
            UtilityOracle::Hashed(h) => UtilityFile::Hashed { seed: h.seed() },
        };
        GameFile {
            graph: game.graph().clone(),
            utilities,
        }
    }

    pub fn into_game(self) -> Result<HedonicGame> {
        let oracle = match self.utilities {
            UtilityFile::Table {
                default_connected,
                default_disconnected,
                entries,
            } => {
                let mut t = UtilityTable::new(default_connected, default_disconnected)?;
                for e in entries {
                    for (p, v) in e.values {
                        t.set(&e.coalition, p, v)?;
                    }
                }
                UtilityOracle::Table(t)
            }
            UtilityFile::Hashed { seed } => UtilityOracle::Hashed(HashValuation::new(seed)),
        };
        HedonicGame::new(self.graph, oracle)
    }
}

/// `{"blocks": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub blocks: Vec<Coalition>,
}

impl PartitionFile {
    pub fn from_partition(pi: &CoalitionStructure) -> Self {
        PartitionFile {
            blocks: pi.blocks().to_vec(),
        }
    }

    pub fn into_partition(self, n: usize) -> Result<CoalitionStructure> {
        CoalitionStructure::new(n, self.blocks)
    }
}

/// `{"coalitions": [[...], ...], "probabilities": [...]}`; omitted
/// probabilities mean uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub coalitions: Vec<Coalition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
}

impl DistributionFile {
    pub fn from_distribution(d: &CoalitionDistribution) -> Result<Self> {
        let support: Vec<_> = d.support().ok_or(Error::GenerativeDistribution)?.collect();
        Ok(DistributionFile {
            coalitions: support.iter().map(|(c, _)| (*c).clone()).collect(),
            probabilities: Some(support.iter().map(|&(_, p)| p).collect()),
        })
    }

    pub fn into_distribution(self) -> Result<CoalitionDistribution> {
        match self.probabilities {
            Some(p) => CoalitionDistribution::finite(self.coalitions, p),
            None => CoalitionDistribution::uniform(self.coalitions),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}
