//! Core library for the pBC+ probabilistic action language toolkit:
//! propositional formulas over multi-valued constants, weighted programs
//! with exact stable-model enumeration, the probabilistic-program
//! translation, action descriptions with their transition-system
//! semantics, and exact query answering.

pub mod formula;
pub mod lpmln;
pub mod mvpp;
pub mod parser;
pub mod pbc;
pub mod query;
pub mod transition;
pub mod translator;

pub use formula::{Formula, Tri};
pub use lpmln::{
    AtomId, ConstId, Constant, EnumOptions, Interpretation, LpmlnError, MapOutcome, ModelWeight,
    ProbResult, Signature, Weight, Weight2, WeightedProgram, WeightedRule,
};
