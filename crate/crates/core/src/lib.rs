//! Recoverability analysis on cluster-level missingness graphs.
//!
//! The crate covers the whole pipeline: a mixed-graph substrate for ADMGs,
//! m-ADMGs and their cluster abstractions ([`graph`]), d-separation on
//! cyclic mixed graphs ([`separation`]), abstraction and compatibility
//! ([`abstraction`]), joint-distribution recoverability ([`joint`]),
//! do-calculus derivations ([`docalc`]) and an exact discrete-SCM oracle
//! ([`oracle`]) that checks every emitted formula numerically.

pub mod abstraction;
pub mod docalc;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod joint;
pub mod oracle;
pub mod par;
pub mod separation;

pub use error::{Error, Result};
pub use graph::parse::{parse_clustering, parse_graph};
pub use graph::{Clustering, GraphBuilder, GraphClass, Kind, MixedGraph};
pub use par::Parallelism;
