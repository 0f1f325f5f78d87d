//! Isomorph-free enumeration of finite non-degenerate set-theoretic
//! solutions of the Yang–Baxter equation, cycle sets, racks, skew cycle
//! sets and biquandles.
//!
//! Tables are stored 0-based internally; every parser, printer and error
//! message speaks 1-based labels.

pub mod canon;
pub mod enumerate;
pub mod perm;
pub mod props;
pub mod store;
pub mod tables;
pub mod yb;

pub use canon::{act, are_isomorphic, canonical_form, canonical_form_skew, is_lex_min, rack_automorphisms, LabeledOrbitKey};
pub use enumerate::{
    enumerate_cycle_sets, enumerate_non_involutive, enumerate_racks, enumerate_skew_cycle_sets, enumerate_skew_over_racks,
    enumerate_solutions, EnumError, Enumeration, Family, Kind, SearchConfig, SearchStats, SymmetryMode,
};
pub use perm::{class_representatives, support_filter, Centralizer, CycleType, Permutation};
pub use props::{classify_cycle_set, classify_solution, ClassificationRecord, Summary};
pub use store::{read_dataset, write_dataset, DatasetHeader, DatasetKind, Record};
pub use tables::{check_cycle_set, check_rack, check_skew_cycle_set, is_quandle, CycleSetTable, Matrix, RackTable, SkewCycleSet};
pub use yb::{verify_ybe, is_involutive, SolutionMap};
