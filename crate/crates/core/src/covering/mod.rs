//! Greedy covering selections for dyadic and directional rectangle families
//! and exhaustive checkers for the combinatorial facts they guarantee.

pub mod directional;
pub mod dyadic;

use serde::{Deserialize, Serialize};

pub use directional::{
    build_y, check_directional_certificates, check_directional_covering, check_lemma31, lemma31_buckets,
    random_lemma31_instance, random_sector_family, select_directional, DirectionalCoveringReport, DirectionalSelection,
    Lemma31Instance, Lemma31Outcome,
};
pub use dyadic::{
    adversarial_nested_family, check_covering_inclusion, check_dyadic_certificates, check_structure,
    multiplicity_bound_check, random_dyadic_family, select_dyadic, DyadicSelection, MultiplicityField, Threshold,
    TraceEntry,
};

/// Outcome of one checker over one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    /// Number of elementary comparisons performed.
    pub checked: u64,
    /// First counterexample found, in a checker-specific layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl CheckReport {
    fn pass(check: &str, checked: u64) -> Self {
        Self {
            check: check.into(),
            passed: true,
            checked,
            witness: None,
        }
    }

    fn fail(check: &str, checked: u64, witness: serde_json::Value) -> Self {
        Self {
            check: check.into(),
            passed: false,
            checked,
            witness: Some(witness),
        }
    }
}
