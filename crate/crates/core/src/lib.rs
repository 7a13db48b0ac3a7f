//! Verifiable-data synthesis engine.
//!
//! Candidate solutions are cross-executed against candidate tests to form a
//! pass matrix; a filtering [`strategy`] ranks both sides; the [`evaluator`]
//! scores strategies by their consistency with annotated seed data; and
//! [`evolve`] searches the strategy space with an island MAP-Elites loop.
//! The [`pipeline`] applies a chosen strategy to freshly generated problems
//! and exports the surviving instances.

pub mod client;
pub mod error;
pub mod evaluator;
pub mod evolve;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result, StrategyFault};
pub use matrix::{binarize, is_zero_variance, pass_counts, BoolMatrix, PassMatrix};
pub use model::{Origin, Outcome, Problem, Protocol, SeedInstance, Solution, TestArtifact, TestPayload, Verdict};
pub use strategy::{builtin, Builtin, Expr, Scorer, Strategy, StrategyOutput};
