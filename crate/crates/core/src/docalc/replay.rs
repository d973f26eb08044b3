//! Re-checking derivations step by step.

use serde::{Deserialize, Serialize};

use super::expr::ProbExpr;
use super::rules::{apply, Move, Rule};
use super::search::{Derivation, Step};
use crate::error::{Error, Result};
use crate::graph::MixedGraph;

/// One move of a hand-written derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedStep {
    #[serde(default)]
    pub site: Vec<usize>,
    #[serde(rename = "move")]
    pub mv: Move,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub query: ProbExpr,
    pub steps: Vec<PlannedStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub valid: bool,
    /// Steps applied successfully, in order.
    pub steps: Vec<Step>,
    /// One-based index of the first failing step.
    pub failed_step: Option<usize>,
    pub failed_rule: Option<Rule>,
    pub error: Option<String>,
}

/// Applies `plan` move by move, stopping at the first move the graph does
/// not license.
pub fn replay(g: &MixedGraph, plan: &Plan) -> ReplayReport {
    let mut cur = plan.query.canonical();
    let mut steps = Vec::new();
    for (i, st) in plan.steps.iter().enumerate() {
        match apply(g, &cur, &st.site, &st.mv) {
            Ok((next, certificate)) => {
                steps.push(Step {
                    rule: st.mv.rule(),
                    site: st.site.clone(),
                    mv: st.mv.clone(),
                    before: cur.clone(),
                    after: next.clone(),
                    certificate,
                });
                cur = next;
            }
            Err(e) => {
                return ReplayReport {
                    valid: false,
                    steps,
                    failed_step: Some(i + 1),
                    failed_rule: Some(st.mv.rule()),
                    error: Some(e.to_string()),
                }
            }
        }
    }
    ReplayReport {
        valid: true,
        steps,
        failed_step: None,
        failed_rule: None,
        error: None,
    }
}

impl Plan {
    pub fn from_derivation(d: &Derivation) -> Plan {
        Plan {
            query: d.query.clone(),
            steps: d
                .steps
                .iter()
                .map(|s| PlannedStep {
                    site: s.site.clone(),
                    mv: s.mv.clone(),
                })
                .collect(),
        }
    }
}

/// Checks a recorded derivation: each step must chain from the previous
/// one, reproduce its recorded result, and carry a certificate that holds
/// in `g`.
pub fn verify(g: &MixedGraph, d: &Derivation) -> Result<()> {
    let mut cur = d.query.canonical();
    for (i, s) in d.steps.iter().enumerate() {
        let n = i + 1;
        if s.before.canonical() != cur {
            return Err(Error::Derivation(format!(
                "step {n} does not start where step {} ended",
                n - 1
            )));
        }
        let (next, cert) =
            apply(g, &cur, &s.site, &s.mv).map_err(|e| Error::Derivation(format!("step {n} ({}): {e}", s.rule)))?;
        if next != s.after.canonical() {
            return Err(Error::Derivation(format!(
                "step {n} ({}) does not produce its recorded result",
                s.rule
            )));
        }
        if cert != s.certificate {
            return Err(Error::Derivation(format!(
                "step {n} ({}) has a different certificate",
                s.rule
            )));
        }
        if let Some(c) = &cert {
            if !c.holds(g)? {
                return Err(Error::Derivation(format!("step {n} ({}): {} does not hold", s.rule, c)));
            }
        }
        cur = next;
    }
    Ok(())
}

/// The five-move order that derives the effect of `CX` on `CY` in the
/// two-indicator running example: observe `R_CY`, swap in the proxy of
/// `CY`, exchange `do(CX)` for an observation, observe `R_CX`, swap in the
/// proxy of `CX`.
pub fn example_plan() -> Plan {
    use super::expr::Atom;
    let step = |mv| PlannedStep { site: Vec::new(), mv };
    Plan {
        query: super::search::effect_query(["CY"], ["CX"], Vec::<String>::new()),
        steps: vec![
            step(Move::InsertObservation {
                atom: Atom::observed("R_CY"),
            }),
            step(Move::Proxy { cluster: "CY".into() }),
            step(Move::ActionToObservation {
                clusters: ["CX".to_string()].into(),
            }),
            step(Move::InsertObservation {
                atom: Atom::observed("R_CX"),
            }),
            step(Move::Proxy { cluster: "CX".into() }),
        ],
    }
}
