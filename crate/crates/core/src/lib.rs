//! Counting answers of existential positive queries over finite relational structures.
//!
//! Formulas are read with [`parse_formula_file`] and structures with
//! [`parse_structures`]. Counts come from [`count_pp`], [`count_ep`] or the
//! reference evaluator [`brute_force_count`].

mod lexer;

pub mod classify;
pub mod count;
pub mod enumerate;
pub mod equivalence;
pub mod error;
pub mod expansion;
pub mod formula;
pub mod hom;
pub mod normalize;
pub mod oracle;
pub mod pp;
pub mod random;
pub mod selftest;
pub mod signature;
pub mod structure;
pub mod vandermonde;

pub use classify::{classify_named, classify_set, treewidth, FormulaGraph, StructuralReport};
pub use count::{brute_force_count, count_ep, count_pp, AnswerCount};
pub use equivalence::{
    counting_equivalent, logically_equivalent, semi_counting_equivalent, EquivalenceVerdict,
    SearchLimits,
};
pub use error::{Error, ParseError, Result};
pub use expansion::{plus_set, star_expansion, PlusSet, WeightedPpSum};
pub use formula::{parse_formula, parse_formula_file, parse_formula_file_with, EpFormula, Node};
pub use hom::{core, find_homomorphism, hom_equivalent};
pub use normalize::{normalize_ep, DisjunctiveEp};
pub use pp::{conjoin_pp, to_structure_view, PpFormula};
pub use signature::Signature;
pub use structure::{parse_structure, parse_structures, Structure};
