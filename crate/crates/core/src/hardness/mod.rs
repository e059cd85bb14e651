//! Constructive negative results: the SAT reduction for sample-consistent
//! paths and forests, the cycle counterexample, and shattering witnesses.

pub mod cycle;
pub mod reduction;
pub mod sat;
pub mod shatter;

pub use cycle::{
    build_cycle_counterexample, stable_sets_disjoint, CycleCounterexample, CycleStabilityReport,
    CYCLE_ENUMERATION_LIMIT,
};
pub use reduction::{
    extract_assignment, reduce_sat_to_forest, reduce_sat_to_path, witness_path, PairException, ReductionInstance, Role,
    Target,
};
pub use sat::{brute_force_sat, random_b2_formula, Assignment, B2SatFormula, Literal};
pub use shatter::{build_shattering_valuation, realizes_labels, ShatterTarget};
