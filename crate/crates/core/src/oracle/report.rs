//! Numerical checks of emitted formulas and derivations against exact
//! models on compatible variable-level graphs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::eval::{assignments, free_symbols, valuations, Assignment, Evaluator, Source};
use super::scm::DiscreteScm;
use crate::abstraction::{infer_clustering, sample_compatible, Budget};
use crate::docalc::expr::{Atom, ProbExpr, Term};
use crate::docalc::search::Derivation;
use crate::error::{Error, Result};
use crate::graph::{Clustering, MixedGraph};
use crate::par::{self, Parallelism};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Compatible variable-level graphs to draw.
    pub graphs: usize,
    /// Random models per graph.
    pub models: usize,
    pub seed: u64,
    /// Values per variable.
    pub card: usize,
    pub max_vars_per_cluster: usize,
    pub tolerance: f64,
    pub mode: Parallelism,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            graphs: 20,
            models: 100,
            seed: 0,
            card: 2,
            max_vars_per_cluster: 2,
            tolerance: 1e-9,
            mode: Parallelism::best(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub graphs_tested: usize,
    pub scms_tested: usize,
    pub max_abs_error: f64,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, other: OracleReport) {
        self.scms_tested += other.scms_tested;
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
        self.failures.extend(other.failures);
    }
}

/// Largest gap between the joint formula and the true joint distribution
/// of the model, over every valuation of the clusters. The formula is
/// read from the manifest distribution only.
pub fn joint_formula_error(
    g: &MixedGraph,
    formula: &ProbExpr,
    scm: &DiscreteScm,
    clustering: &Clustering,
) -> Result<f64> {
    let truth_ev = Evaluator::new(g, scm, clustering.clone(), Source::Scm, Parallelism::Sequential)?;
    let est_ev = truth_ev.with_source(Source::Manifest);
    let clusters = g.substantive_ids();
    let truth: ProbExpr = Term::new(clusters.iter().map(Atom::value), Vec::<String>::new(), Vec::new()).into();
    let missing = g.ids_of(&g.partially_observed());
    let symbols: BTreeSet<Atom> = clusters.iter().map(Atom::value).collect();
    let mut worst = 0.0f64;
    for a in assignments(&truth_ev, &symbols)? {
        let t = truth_ev.eval(&truth, &a)?;
        let mut b = Assignment::new();
        for (sym, v) in &a {
            let c = sym.cluster().expect("cluster symbol");
            let key = if missing.contains(c) {
                Atom::proxy(c)
            } else {
                sym.clone()
            };
            b.insert(key, v.clone());
        }
        let e = est_ev.eval(formula, &b)?;
        worst = worst.max((t - e).abs());
    }
    Ok(worst)
}

/// Largest gap between two expressions over `g` evaluated in the same
/// model. When their free symbols differ, a cluster's value and proxy are
/// tied to the same (non-missing) valuation. Valuations where either side
/// conditions on an impossible event are skipped.
pub fn expression_gap(
    g: &MixedGraph,
    lhs: &ProbExpr,
    rhs: &ProbExpr,
    scm: &DiscreteScm,
    clustering: &Clustering,
    rhs_source: Source,
) -> Result<f64> {
    let ev = Evaluator::new(g, scm, clustering.clone(), Source::Scm, Parallelism::Sequential)?;
    gap(&ev, &ev.with_source(rhs_source), lhs, rhs)
}

fn gap(ev: &Evaluator<'_>, ev_r: &Evaluator<'_>, lhs: &ProbExpr, rhs: &ProbExpr) -> Result<f64> {
    let (fl, fr) = (free_symbols(lhs), free_symbols(rhs));
    let sigmas: Vec<Assignment> = if fl == fr {
        assignments(ev, &fl)?
    } else {
        let clusters: BTreeSet<String> = fl
            .iter()
            .chain(&fr)
            .filter_map(|a| a.cluster().map(String::from))
            .collect();
        let mut out = vec![Assignment::new()];
        for c in clusters {
            let vals = valuations(&ev.domain(&Atom::value(&c))?);
            out = out
                .into_iter()
                .flat_map(|a| {
                    let c = c.clone();
                    vals.iter().map(move |v| {
                        let mut a = a.clone();
                        a.insert(Atom::value(&c), v.clone());
                        a.insert(Atom::proxy(&c), v.clone());
                        a
                    })
                })
                .collect();
        }
        out
    };
    let mut worst = 0.0f64;
    for s in sigmas {
        let l = ev.eval(lhs, &s);
        let r = ev_r.eval(rhs, &s);
        match (l, r) {
            (Ok(l), Ok(r)) => worst = worst.max((l - r).abs()),
            (Err(Error::Positivity(_)), _) | (_, Err(Error::Positivity(_))) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(worst)
}

fn draw_graphs(abs: &MixedGraph, cfg: &OracleConfig) -> Result<Vec<(MixedGraph, Clustering)>> {
    let budget = Budget::new(cfg.max_vars_per_cluster);
    sample_compatible(abs, &budget, cfg.graphs, cfg.seed)?
        .into_iter()
        .map(|m| {
            let c = infer_clustering(abs, &m)?;
            Ok((m, c))
        })
        .collect()
}

fn run<F>(abs: &MixedGraph, cfg: &OracleConfig, check: F) -> Result<OracleReport>
where
    F: Fn(&MixedGraph, &DiscreteScm, &Clustering) -> Result<Vec<(String, f64)>> + Sync,
{
    let graphs = draw_graphs(abs, cfg)?;
    let jobs: Vec<(usize, u64)> = (0..graphs.len())
        .flat_map(|i| (0..cfg.models as u64).map(move |t| (i, t)))
        .collect();
    let results = par::map(cfg.mode, &jobs, |&(i, t)| -> OracleReport {
        let (m, c) = &graphs[i];
        let mut rep = OracleReport {
            scms_tested: 1,
            ..Default::default()
        };
        let scm = match DiscreteScm::random(m, cfg.card, cfg.seed, t + (i as u64) * 1_000_003) {
            Ok(s) => s,
            Err(e) => {
                rep.failures.push(format!("{} model {t}: {e}", m.name()));
                return rep;
            }
        };
        match check(m, &scm, c) {
            Ok(errs) => {
                for (what, err) in errs {
                    rep.max_abs_error = rep.max_abs_error.max(err);
                    // NaN counts as a failure.
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(err <= cfg.tolerance) {
                        rep.failures
                            .push(format!("{} model {t}: {what} off by {err:.3e}", m.name()));
                    }
                }
            }
            Err(e) => rep.failures.push(format!("{} model {t}: {e}", m.name())),
        }
        rep
    });
    let mut out = OracleReport {
        graphs_tested: graphs.len(),
        ..Default::default()
    };
    for r in results {
        out.merge(r);
    }
    Ok(out)
}

/// Checks a joint formula for `abs` on random compatible graphs and
/// models.
pub fn check_joint_formula(abs: &MixedGraph, formula: &ProbExpr, cfg: &OracleConfig) -> Result<OracleReport> {
    run(abs, cfg, |_, scm, c| {
        Ok(vec![(
            "joint formula".to_string(),
            joint_formula_error(abs, formula, scm, c)?,
        )])
    })
}

/// Checks every step of `d` (both sides evaluated in the full model) and
/// the final expression (read from the manifest distribution) against the
/// query.
pub fn check_derivation(abs: &MixedGraph, d: &Derivation, cfg: &OracleConfig) -> Result<OracleReport> {
    run(abs, cfg, |_, scm, c| {
        let ev = Evaluator::new(abs, scm, c.clone(), Source::Scm, Parallelism::Sequential)?;
        let manifest = ev.with_source(Source::Manifest);
        let mut out = Vec::new();
        for (i, s) in d.steps.iter().enumerate() {
            out.push((
                format!("step {} ({})", i + 1, s.rule),
                gap(&ev, &ev, &s.before, &s.after)?,
            ));
        }
        out.push(("result".to_string(), gap(&ev, &manifest, &d.query, d.result())?));
        Ok(out)
    })
}
