use thiserror::Error;

use crate::graph::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid graph: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("walk has no vertices")]
    EmptyWalk,
    #[error("wrong graph class: expected {expected}, found {found}")]
    WrongGraphClass { expected: String, found: String },
    #[error("invalid clustering: {0}")]
    InvalidClustering(String),
    #[error("no compatible graph within budget: {0}")]
    BudgetTooSmall(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("proxy substitution for `{0}` needs its indicator literal in the term")]
    MissingIndicatorLiteral(String),
    #[error("symbol `{0}` already occurs in the expression")]
    SymbolAlreadyBound(String),
    #[error("search depth must be at least 1")]
    DepthNonPositive,
    #[error("model domain too large: {states} joint states (limit {limit})")]
    DomainTooLarge { states: u128, limit: u128 },
    #[error("intervention must fix every variable of cluster `{0}`")]
    PartialClusterAssignment(String),
    #[error("cannot evaluate expression: {0}")]
    Evaluation(String),
    #[error("positivity violated: conditioning stratum {0} has zero probability")]
    Positivity(String),
    #[error("invalid derivation: {0}")]
    Derivation(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
