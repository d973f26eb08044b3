//! Exact discrete models used to check formulas and derivations
//! numerically.

pub mod eval;
pub mod report;
pub mod scm;
pub mod simulate;
pub mod witness;

pub use eval::{cluster_interventional_table, Evaluator, Source, NA};
pub use report::{
    check_derivation, check_joint_formula, expression_gap, joint_formula_error, OracleConfig, OracleReport,
};
pub use scm::{DiscreteScm, JointTable};
pub use simulate::{simulate, Dataset};
pub use witness::{find_witness_pair, self_masking_example, WitnessPair, WitnessSummary};
