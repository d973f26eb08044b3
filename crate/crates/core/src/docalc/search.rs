//! Breadth-first derivation search over canonical expressions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::expr::{Atom, ProbExpr, Term};
use super::rules::{apply, candidate_moves, Certificate, Move, Rule};
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::par::{self, Parallelism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_depth: usize,
    /// Distinct expressions the search may visit before giving up.
    pub node_budget: usize,
    /// Largest number of probability terms in any visited expression.
    pub max_terms: usize,
    pub mode: Parallelism,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_depth: 12,
            node_budget: 250_000,
            max_terms: 4,
            mode: Parallelism::best(),
        }
    }
}

impl SearchConfig {
    pub fn depth(mut self, d: usize) -> Self {
        self.max_depth = d;
        self
    }

    pub fn mode(mut self, mode: Parallelism) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub site: Vec<usize>,
    #[serde(rename = "move")]
    pub mv: Move,
    pub before: ProbExpr,
    pub after: ProbExpr,
    pub certificate: Option<Certificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub query: ProbExpr,
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn result(&self) -> &ProbExpr {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.query)
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.steps.iter().map(|s| s.rule).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchOutcome {
    Derived(Derivation),
    NotDerived {
        explored: usize,
        depth_reached: usize,
        /// True when every expression within the limits was visited.
        exhausted: bool,
    },
}

impl SearchOutcome {
    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            SearchOutcome::Derived(d) => Some(d),
            SearchOutcome::NotDerived { .. } => None,
        }
    }
}

/// An expression estimable from the observed-data distribution: no
/// interventions, and partially observed clusters appear only through
/// their proxies, each next to the cluster's zero indicator literals.
pub fn is_goal(g: &MixedGraph, e: &ProbExpr) -> bool {
    if e.has_do() {
        return false;
    }
    let missing = g.ids_of(&g.partially_observed());
    let mut ok = true;
    let mut check = |a: &Atom| {
        if let Atom::Value { cluster, proxy: false } = a {
            if missing.contains(cluster) {
                ok = false;
            }
        }
    };
    for (_, t) in e.terms() {
        t.atoms().for_each(&mut check);
    }
    sum_bounds(e).iter().for_each(&mut check);
    ok && e.terms().iter().all(|(_, t)| proxies_carry_literals(g, t))
}

/// Each proxy in `t` comes with every indicator literal of its cluster.
fn proxies_carry_literals(g: &MixedGraph, t: &Term) -> bool {
    t.atoms().filter(|a| a.is_proxy()).all(|a| {
        let c = a.cluster().expect("proxy of a cluster");
        super::rules::required_literals(g, c)
            .map(|rs| rs.iter().all(|r| t.has_literal(r)))
            .unwrap_or(false)
    })
}

fn sum_bounds(e: &ProbExpr) -> Vec<Atom> {
    let mut out = Vec::new();
    fn go(e: &ProbExpr, out: &mut Vec<Atom>) {
        match e {
            ProbExpr::Sum { over, body } => {
                out.push(over.clone());
                go(body, out);
            }
            ProbExpr::Product(fs) => fs.iter().for_each(|f| go(f, out)),
            ProbExpr::Quotient { num, den } => {
                go(num, out);
                go(den, out);
            }
            _ => {}
        }
    }
    go(e, &mut out);
    out
}

fn sum_sites(e: &ProbExpr) -> Vec<Vec<usize>> {
    fn go(e: &ProbExpr, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match e {
            ProbExpr::Sum { body, .. } => {
                out.push(path.clone());
                path.push(0);
                go(body, path, out);
                path.pop();
            }
            ProbExpr::Product(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    path.push(i);
                    go(f, path, out);
                    path.pop();
                }
            }
            ProbExpr::Quotient { num, den } => {
                path.push(0);
                go(num, path, out);
                path.pop();
                path.push(1);
                go(den, path, out);
                path.pop();
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

type Successor = (ProbExpr, Vec<usize>, Move, Option<Certificate>);

/// Every licensed one-step rewrite of `e`, in rule order then site order.
pub fn successors(g: &MixedGraph, e: &ProbExpr, max_terms: usize) -> Vec<Successor> {
    let mut out: Vec<(Rule, usize, Successor)> = Vec::new();
    let mut k = 0usize;
    for (site, t) in e.terms() {
        for mv in candidate_moves(g, e, t) {
            if let Ok((next, cert)) = apply(g, e, &site, &mv) {
                if next.terms().len() <= max_terms {
                    out.push((mv.rule(), k, (next, site.clone(), mv, cert)));
                }
            }
            k += 1;
        }
    }
    for site in sum_sites(e) {
        if let Ok((next, cert)) = apply(g, e, &site, &Move::Marginalize) {
            out.push((Rule::Marginalize, k, (next, site, Move::Marginalize, cert)));
        }
        k += 1;
    }
    out.sort_by_key(|(r, i, _)| (*r, *i));
    out.into_iter().map(|(_, _, s)| s).collect()
}

struct Node {
    expr: ProbExpr,
    parent: Option<(usize, Vec<usize>, Move, Option<Certificate>)>,
}

fn rebuild(nodes: &[Node], mut i: usize) -> Vec<Step> {
    let mut steps = Vec::new();
    while let Some((p, site, mv, cert)) = &nodes[i].parent {
        steps.push(Step {
            rule: mv.rule(),
            site: site.clone(),
            mv: mv.clone(),
            before: nodes[*p].expr.clone(),
            after: nodes[i].expr.clone(),
            certificate: cert.clone(),
        });
        i = *p;
    }
    steps.reverse();
    steps
}

/// Searches for a derivation of `query` that ends in an observed-data
/// expression. Layers are expanded in parallel and merged in a fixed
/// order, so the result does not depend on the mode.
pub fn derive(g: &MixedGraph, query: &ProbExpr, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.max_depth == 0 {
        return Err(Error::DepthNonPositive);
    }
    if !g.class().is_cluster_level() || !g.class().allows_indicators() {
        return Err(Error::WrongGraphClass {
            expected: "m-c-dmg or cm-c-dmg".into(),
            found: g.class().to_string(),
        });
    }
    let start = query.canonical();
    let mut nodes = vec![Node {
        expr: start.clone(),
        parent: None,
    }];
    if is_goal(g, &start) {
        return Ok(SearchOutcome::Derived(Derivation {
            query: start,
            steps: Vec::new(),
        }));
    }
    let mut seen: HashMap<ProbExpr, usize> = HashMap::from([(start, 0)]);
    let mut layer = vec![0usize];
    for depth in 1..=cfg.max_depth {
        let exprs: Vec<&ProbExpr> = layer.iter().map(|&i| &nodes[i].expr).collect();
        let expanded = par::map(cfg.mode, &exprs, |e| successors(g, e, cfg.max_terms));
        let mut next = Vec::new();
        for (&parent, succ) in layer.iter().zip(expanded) {
            for (expr, site, mv, cert) in succ {
                if seen.contains_key(&expr) {
                    continue;
                }
                let i = nodes.len();
                let goal = is_goal(g, &expr);
                seen.insert(expr.clone(), i);
                nodes.push(Node {
                    expr,
                    parent: Some((parent, site, mv, cert)),
                });
                if goal {
                    return Ok(SearchOutcome::Derived(Derivation {
                        query: nodes[0].expr.clone(),
                        steps: rebuild(&nodes, i),
                    }));
                }
                if nodes.len() >= cfg.node_budget {
                    return Ok(SearchOutcome::NotDerived {
                        explored: nodes.len(),
                        depth_reached: depth,
                        exhausted: false,
                    });
                }
                next.push(i);
            }
        }
        if next.is_empty() {
            return Ok(SearchOutcome::NotDerived {
                explored: nodes.len(),
                depth_reached: depth,
                exhausted: true,
            });
        }
        layer = next;
    }
    Ok(SearchOutcome::NotDerived {
        explored: nodes.len(),
        depth_reached: cfg.max_depth,
        exhausted: false,
    })
}

/// `P(outcomes | do(interventions), given)` over cluster values.
pub fn effect_query<O, D, W, S1, S2, S3>(outcomes: O, interventions: D, given: W) -> ProbExpr
where
    O: IntoIterator<Item = S1>,
    D: IntoIterator<Item = S2>,
    W: IntoIterator<Item = S3>,
    S1: Into<String>,
    S2: Into<String>,
    S3: Into<String>,
{
    Term::new(
        outcomes.into_iter().map(|c| Atom::value(c.into())),
        interventions,
        given.into_iter().map(|c| Atom::value(c.into())),
    )
    .into()
}
