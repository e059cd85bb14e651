//! Learning stable coalition structures in hedonic games whose feasible
//! coalitions are the connected sets of an interaction graph.

pub mod error;
pub mod game;
pub mod graph;
pub mod hardness;
pub mod harness;
pub mod inference;
pub mod io;
pub mod sampling;
pub mod stabilizer;

pub use error::{Error, Result};
pub use game::{CoalitionStructure, HedonicGame, UtilityOracle, UtilityTable};
pub use graph::{Coalition, InteractionGraph, PlayerId};
pub use sampling::{CoalitionDistribution, LabeledSample};
pub use stabilizer::{pac_stabilize, pac_stabilize_unknown_forest, PacParams};
