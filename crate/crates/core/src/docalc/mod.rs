//! Do-calculus derivations for cluster-level missingness graphs.
//!
//! Expressions are built from [`expr::Term`]s over cluster values, proxies
//! and indicator literals. [`rules::apply`] performs one licensed rewrite,
//! [`search::derive`] looks for a sequence that ends in an observed-data
//! expression, and [`replay`] re-checks a given sequence.

pub mod expr;
pub mod replay;
pub mod rules;
pub mod search;

pub use expr::{Atom, ProbExpr, Term};
pub use replay::{example_plan, replay, verify, Plan, PlannedStep, ReplayReport};
pub use rules::{apply, Certificate, Move, Rule};
pub use search::{derive, effect_query, is_goal, Derivation, SearchConfig, SearchOutcome, Step};
