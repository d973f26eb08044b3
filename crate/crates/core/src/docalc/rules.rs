//! Individual rewrite moves. Every move applied through [`apply`] carries
//! the d-separation statement that licenses it, when one is needed.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::{Atom, ProbExpr, Term};
use crate::error::{Error, Result};
use crate::graph::{GraphClass, MixedGraph};
use crate::separation::{ancestors_ix, d_separated_ix, mutilate_ix, MutilationSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    Proxy,
    TotalProb,
    ChainRule,
    Marginalize,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::Proxy => "Proxy",
            Rule::TotalProb => "TotalProb",
            Rule::ChainRule => "ChainRule",
            Rule::Marginalize => "Marginalize",
        };
        f.write_str(s)
    }
}

/// A concrete rewrite of the subexpression at some site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    /// Rule 1, adding an observation.
    InsertObservation { atom: Atom },
    /// Rule 1, removing an observation.
    DeleteObservation { atom: Atom },
    /// Rule 2, replacing interventions by observations.
    ActionToObservation { clusters: BTreeSet<String> },
    /// Rule 3, dropping interventions.
    DeleteAction { clusters: BTreeSet<String> },
    /// Swap a cluster's value for its proxy; needs every indicator literal
    /// of the cluster in the term.
    Proxy { cluster: String },
    /// Condition on and sum out a new symbol.
    TotalProbability { over: Atom },
    /// Split one outcome into a separate factor.
    ChainRule { atom: Atom },
    /// Remove a sum whose symbol appears only as an outcome of one factor.
    Marginalize,
}

impl Move {
    pub fn rule(&self) -> Rule {
        match self {
            Move::InsertObservation { .. } | Move::DeleteObservation { .. } => Rule::R1,
            Move::ActionToObservation { .. } => Rule::R2,
            Move::DeleteAction { .. } => Rule::R3,
            Move::Proxy { .. } => Rule::Proxy,
            Move::TotalProbability { .. } => Rule::TotalProb,
            Move::ChainRule { .. } => Rule::ChainRule,
            Move::Marginalize => Rule::Marginalize,
        }
    }
}

/// `(y ⊥ x | z)` in the graph mutilated by `mutilation`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub y: BTreeSet<String>,
    pub x: BTreeSet<String>,
    pub z: BTreeSet<String>,
    pub mutilation: MutilationSpec,
}

impl Certificate {
    pub fn holds(&self, g: &MixedGraph) -> Result<bool> {
        let m = crate::separation::mutilate(g, &self.mutilation)?;
        crate::separation::d_separated(&m, &self.y, &self.x, &self.z)
    }

    pub fn render(&self) -> String {
        let j = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        let z = if self.z.is_empty() {
            String::new()
        } else {
            format!(" | {}", j(&self.z))
        };
        format!(
            "({} _||_ {}{z}) in {}",
            j(&self.y),
            j(&self.x),
            self.mutilation.render()
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Vertices of `g` carrying the information of `atom`. At the m-level a
/// proxy stands for the member proxies, plus the cluster vertex itself
/// when some member has no indicator.
pub fn atom_vertices(g: &MixedGraph, atom: &Atom) -> Result<BTreeSet<usize>> {
    match atom {
        Atom::Value { cluster, proxy: false } => Ok([g.index_of(cluster)?].into()),
        Atom::Value { cluster, proxy: true } => {
            let c = g.index_of(cluster)?;
            let mut out = BTreeSet::new();
            if g.class() == GraphClass::MCDmg {
                let members = g
                    .clustering()
                    .members(cluster)
                    .ok_or_else(|| Error::UnknownVertex(cluster.clone()))?;
                for m in members {
                    match g.proxy_of(m) {
                        Some(p) => {
                            out.insert(p);
                        }
                        None => {
                            out.insert(c);
                        }
                    }
                }
            } else if let Some(p) = g.proxy_of(cluster) {
                out.insert(p);
            } else {
                out.insert(c);
            }
            if out == BTreeSet::from([c]) {
                return Err(Error::Derivation(format!("`{cluster}` has no proxy")));
            }
            Ok(out)
        }
        Atom::Indicator { r, .. } => Ok([g.index_of(r)?].into()),
    }
}

fn vertices_of<'a, I: IntoIterator<Item = &'a Atom>>(g: &MixedGraph, atoms: I) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for a in atoms {
        out.extend(atom_vertices(g, a)?);
    }
    Ok(out)
}

fn cluster_vertices(g: &MixedGraph, cs: &BTreeSet<String>) -> Result<BTreeSet<usize>> {
    cs.iter().map(|c| g.index_of(c)).collect()
}

/// Indicator vertices that must be zero before `cluster` may be replaced
/// by its proxy.
pub fn required_literals(g: &MixedGraph, cluster: &str) -> Result<Vec<String>> {
    let c = g.index_of(cluster)?;
    Ok(g.indicators_of_substantive(c)
        .into_iter()
        .map(|r| g.id(r).to_string())
        .collect())
}

fn separated(
    g: &MixedGraph,
    y: &BTreeSet<usize>,
    x: &BTreeSet<usize>,
    z: &BTreeSet<usize>,
    spec: (&BTreeSet<usize>, &BTreeSet<usize>),
) -> Result<Certificate> {
    let ids = |s: &BTreeSet<usize>| g.ids_of(s);
    let cert = Certificate {
        y: ids(y),
        x: ids(x),
        z: ids(z),
        mutilation: MutilationSpec::overline(ids(spec.0)).and_underline(ids(spec.1)),
    };
    let overlap = y
        .intersection(x)
        .next()
        .or_else(|| y.intersection(z).next())
        .or_else(|| x.intersection(z).next());
    if let Some(&v) = overlap {
        return Err(Error::Derivation(format!(
            "{} is not a valid separation statement (`{}` repeats)",
            cert.render(),
            g.id(v)
        )));
    }
    let m = mutilate_ix(g, spec.0, spec.1);
    if d_separated_ix(&m, y, x, z) {
        Ok(cert)
    } else {
        Err(Error::Derivation(format!("{} does not hold", cert.render())))
    }
}

fn term_at(expr: &ProbExpr, site: &[usize]) -> Result<Term> {
    match expr.at(site) {
        Some(ProbExpr::Term(t)) => Ok(t.clone()),
        Some(_) => Err(Error::Derivation(format!("site {site:?} is not a probability term"))),
        None => Err(Error::Derivation(format!("site {site:?} does not exist"))),
    }
}

fn replace(expr: &ProbExpr, site: &[usize], new: ProbExpr) -> Result<ProbExpr> {
    expr.replace_at(site, new)
        .map(|e| e.canonical())
        .ok_or_else(|| Error::Derivation(format!("site {site:?} does not exist")))
}

/// Applies `mv` to the subexpression at `site`, returning the canonical
/// rewritten expression and the licensing certificate.
pub fn apply(g: &MixedGraph, expr: &ProbExpr, site: &[usize], mv: &Move) -> Result<(ProbExpr, Option<Certificate>)> {
    if let Move::Marginalize = mv {
        return marginalize(expr, site).map(|e| (e, None));
    }
    let t = term_at(expr, site)?;
    let none = BTreeSet::new();
    match mv {
        Move::InsertObservation { atom } | Move::DeleteObservation { atom } => {
            let inserting = matches!(mv, Move::InsertObservation { .. });
            if inserting == t.cond.contains(atom) || (inserting && t.outcomes.contains(atom)) {
                return Err(Error::Derivation(format!(
                    "`{}` {} the conditioning set",
                    atom.text(),
                    if inserting { "is already in" } else { "is not in" }
                )));
            }
            let mut rest = t.cond.clone();
            rest.remove(atom);
            let y = vertices_of(g, &t.outcomes)?;
            let x = atom_vertices(g, atom)?;
            let dov = cluster_vertices(g, &t.do_set)?;
            let mut z = vertices_of(g, &rest)?;
            z.extend(&dov);
            let cert = separated(g, &y, &x, &z, (&dov, &none))?;
            let mut nt = t.clone();
            if inserting {
                nt.cond.insert(atom.clone());
            } else {
                nt.cond.remove(atom);
            }
            Ok((replace(expr, site, nt.into())?, Some(cert)))
        }
        Move::ActionToObservation { clusters } | Move::DeleteAction { clusters } => {
            if clusters.is_empty() || !clusters.is_subset(&t.do_set) {
                return Err(Error::Derivation("clusters are not all intervened on".into()));
            }
            let keep: BTreeSet<String> = t.do_set.difference(clusters).cloned().collect();
            let y = vertices_of(g, &t.outcomes)?;
            let xv = cluster_vertices(g, clusters)?;
            let keepv = cluster_vertices(g, &keep)?;
            let w = vertices_of(g, &t.cond)?;
            let mut z = w.clone();
            z.extend(&keepv);
            let mut nt = t.clone();
            nt.do_set = keep;
            let cert = if let Move::ActionToObservation { .. } = mv {
                nt.cond.extend(clusters.iter().map(Atom::value));
                separated(g, &y, &xv, &z, (&keepv, &xv))?
            } else {
                let base = mutilate_ix(g, &keepv, &none);
                let an_w = ancestors_ix(&base, &w);
                let xw: BTreeSet<usize> = xv.difference(&an_w).copied().collect();
                let over: BTreeSet<usize> = keepv.union(&xw).copied().collect();
                separated(g, &y, &xv, &z, (&over, &none))?
            };
            Ok((replace(expr, site, nt.into())?, Some(cert)))
        }
        Move::Proxy { cluster } => {
            let atom = Atom::value(cluster);
            if !t.outcomes.contains(&atom) && !t.cond.contains(&atom) {
                return Err(Error::Derivation(format!("`{cluster}` does not occur in the term")));
            }
            if expr.bound().contains(cluster) {
                return Err(Error::SymbolAlreadyBound(cluster.clone()));
            }
            let lits = required_literals(g, cluster)?;
            if lits.is_empty() {
                return Err(Error::Derivation(format!("`{cluster}` is fully observed")));
            }
            if let Some(r) = lits.iter().find(|r| !t.has_literal(r)) {
                return Err(Error::MissingIndicatorLiteral(r.clone()));
            }
            let swap = |s: &BTreeSet<Atom>| -> BTreeSet<Atom> {
                s.iter()
                    .map(|a| if *a == atom { Atom::proxy(cluster) } else { a.clone() })
                    .collect()
            };
            let nt = Term {
                outcomes: swap(&t.outcomes),
                do_set: t.do_set.clone(),
                cond: swap(&t.cond),
            };
            Ok((replace(expr, site, nt.into())?, None))
        }
        Move::TotalProbability { over } => {
            let c = over
                .cluster()
                .ok_or_else(|| Error::Derivation("can only sum over a cluster valuation".into()))?;
            g.index_of(c)?;
            if expr.clusters().contains(c) {
                return Err(Error::SymbolAlreadyBound(c.to_string()));
            }
            let mut left = t.clone();
            left.cond.insert(over.clone());
            let right = Term {
                outcomes: [over.clone()].into(),
                do_set: t.do_set.clone(),
                cond: t.cond.clone(),
            };
            let new = ProbExpr::sum(over.clone(), ProbExpr::Product(vec![left.into(), right.into()]));
            Ok((replace(expr, site, new)?, None))
        }
        Move::ChainRule { atom } => {
            if t.outcomes.len() < 2 || !t.outcomes.contains(atom) {
                return Err(Error::Derivation(format!(
                    "cannot split `{}` off the outcomes",
                    atom.text()
                )));
            }
            let mut left = t.clone();
            left.outcomes.remove(atom);
            left.cond.insert(atom.clone());
            let right = Term {
                outcomes: [atom.clone()].into(),
                do_set: t.do_set.clone(),
                cond: t.cond.clone(),
            };
            let new = ProbExpr::Product(vec![left.into(), right.into()]);
            Ok((replace(expr, site, new)?, None))
        }
        Move::Marginalize => unreachable!(),
    }
}

fn marginalize(expr: &ProbExpr, site: &[usize]) -> Result<ProbExpr> {
    let Some(ProbExpr::Sum { over, body }) = expr.at(site) else {
        return Err(Error::Derivation(format!("site {site:?} is not a sum")));
    };
    let c = over.cluster().unwrap_or_default();
    let factors: Vec<ProbExpr> = match body.as_ref() {
        ProbExpr::Product(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    let mentions = |f: &ProbExpr| f.clusters().contains(c);
    let hits: Vec<usize> = (0..factors.len()).filter(|&i| mentions(&factors[i])).collect();
    let [i] = hits[..] else {
        return Err(Error::Derivation(format!(
            "`{}` occurs in more than one factor",
            over.text()
        )));
    };
    let ProbExpr::Term(t) = &factors[i] else {
        return Err(Error::Derivation(format!(
            "`{}` is not summed out of a term",
            over.text()
        )));
    };
    let only_outcome = t.outcomes.contains(over)
        && !t.cond.iter().any(|a| a.cluster() == Some(c))
        && !t.do_set.contains(c)
        && t.outcomes.iter().filter(|a| a.cluster() == Some(c)).count() == 1;
    if !only_outcome {
        return Err(Error::Derivation(format!("`{}` is not a plain outcome", over.text())));
    }
    let mut nt = t.clone();
    nt.outcomes.remove(over);
    let mut factors = factors;
    factors[i] = if nt.outcomes.is_empty() {
        ProbExpr::One
    } else {
        nt.into()
    };
    replace(expr, site, ProbExpr::Product(factors))
}

/// Moves worth trying at a term during search, in rule order. Observation
/// insertion is limited to indicator literals of clusters the term already
/// names by value, and action moves to single clusters or the whole
/// intervention set.
pub fn candidate_moves(g: &MixedGraph, expr: &ProbExpr, t: &Term) -> Vec<Move> {
    let missing: BTreeSet<String> = g.ids_of(&g.partially_observed());
    let mut out = Vec::new();
    let true_missing: BTreeSet<&str> = t
        .atoms()
        .filter(|a| !a.is_proxy())
        .filter_map(Atom::cluster)
        .filter(|c| missing.contains(*c))
        .collect();
    for c in &true_missing {
        for r in required_literals(g, c).unwrap_or_default() {
            let a = Atom::observed(r);
            if !t.cond.contains(&a) && !t.outcomes.contains(&a) {
                out.push(Move::InsertObservation { atom: a });
            }
        }
    }
    for a in &t.cond {
        out.push(Move::DeleteObservation { atom: a.clone() });
    }
    let mut subsets: Vec<BTreeSet<String>> = t.do_set.iter().map(|c| [c.clone()].into()).collect();
    if t.do_set.len() > 1 {
        subsets.push(t.do_set.clone());
    }
    for s in &subsets {
        out.push(Move::ActionToObservation { clusters: s.clone() });
    }
    for s in &subsets {
        out.push(Move::DeleteAction { clusters: s.clone() });
    }
    for c in &true_missing {
        out.push(Move::Proxy { cluster: c.to_string() });
    }
    let used = expr.clusters();
    let mentioned: BTreeSet<usize> = t
        .clusters()
        .into_iter()
        .filter_map(|c| g.index_of(c).ok())
        .chain(t.atoms().filter_map(|a| atom_vertices(g, a).ok()).flatten())
        .collect();
    let mut near: BTreeSet<String> = BTreeSet::new();
    for &v in &mentioned {
        for (_, u) in crate::separation::incident(g, v) {
            let u = if g.kind(u).is_substantive() {
                Some(u)
            } else {
                g.host_of_vertex(u)
            };
            if let Some(u) = u.filter(|u| g.kind(*u).is_substantive()) {
                if !used.contains(g.id(u)) {
                    near.insert(g.id(u).to_string());
                }
            }
        }
    }
    for c in near {
        out.push(Move::TotalProbability { over: Atom::value(c) });
    }
    if t.outcomes.len() > 1 {
        for a in &t.outcomes {
            out.push(Move::ChainRule { atom: a.clone() });
        }
    }
    out
}
