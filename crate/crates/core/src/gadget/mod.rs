//! String gadgets encoding D3 formulas: per-clause blocks, the modular
//! counting multiset and the threshold variants.

mod clause;
mod sharp;
mod tables;
mod threshold;
mod verify;

pub use clause::{clause_block, clause_class_of, pair_block};
pub use sharp::{build_sharp_gadget, extra_length, k_of_p, k_of_p_exact, KValue, SharpGadget};
pub use tables::{clause_key, printed_body, table, Cell, ClauseKey, GadgetRow, GadgetTable, Slot, TableKind, CLASS_HEADINGS};
pub use threshold::{
    build_threshold_gadget, concavity_holds, log_shape, min_product_split, verify_separation, LogShape, Monomial,
    SeparationReport, ThresholdGadget, Variant,
};
pub use verify::{expected_class_multiset, verify_distance_tables, CellMismatch, ClassCheck, TableReport};

use std::ops::Range;

/// A named run of consecutive strings inside a gadget blueprint.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Block {
    pub name: String,
    pub range: Range<usize>,
}
