//! RNA design against a pluggable folding engine.
//!
//! * [`structure`]: dot-bracket targets, sequences, structure distances.
//! * [`folding`]: MFE and ensemble quantities (built-in pair-counting model
//!   or an external folder over a line protocol).
//! * [`objectives`]: the six-objective score and its lexicographic order.
//! * [`localsearch`]: greedy randomized local search and Progressive
//!   Narrowing.
//! * [`tuning`]: narrowing-profile enumeration and replay over recorded runs.
//! * [`mcts`]: nested rollout policy adaptation with limited repetition.
//! * [`cli`]: problem files, batch orchestration and reports.

pub mod cli;
pub mod folding;
pub mod localsearch;
pub mod mcts;
pub mod objectives;
pub mod run;
pub mod structure;
pub mod tuning;

pub use folding::{EngineConfig, EngineKind, FoldError, FoldResult, FoldingEngine};
pub use objectives::{compare, ScoreVector};
pub use run::SearchState;
pub use structure::{NucleotideSequence, TargetStructure};
