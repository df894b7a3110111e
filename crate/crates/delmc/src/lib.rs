//! Symbolic model checking for epistemic logics over BDD-encoded structures.
//!
//! The crate provides:
//! - a self-contained ROBDD engine ([`bdd`]),
//! - vocabularies, formula ASTs and size measures ([`logic`]),
//! - knowledge/belief structures, transformers and their update semantics,
//!   plus a brute-force oracle and the BDD-translation evaluator
//!   ([`structures`]),
//! - two polynomial-space checking algorithms with instrumentation
//!   ([`pspace`]),
//! - mental programs, their relational semantics and canonical builders
//!   ([`programs`]),
//! - translations between mental programs and relation BDDs, with blow-up
//!   witness families ([`translate`]),
//! - explicit Kripke expansion and a QBF reduction for cross-checking
//!   ([`kripke`]),
//! - text frontends for models, formulas, programs and QDIMACS ([`frontend`]),
//! - the command-line surface ([`cli`]).

pub mod bdd;

pub use bdd::{Atom, BddError, BddRef, BinOp, Manager, Provenance, Quant, State};
