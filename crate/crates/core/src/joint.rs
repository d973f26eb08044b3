//! Recoverability of the joint distribution of a cluster-level missingness
//! graph, with the factorized formula when it is recoverable.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::abstraction::{for_each_compatible, infer_clustering, Budget};
use crate::docalc::expr::{Atom, ProbExpr, Term};
use crate::error::{Error, Result};
use crate::graph::{GraphClass, Kind, Mark, MixedGraph};
use crate::par::{self, Parallelism};
use crate::separation::descendants_ix;
use crate::separation::walk::{Walk, WalkEdge};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// The vertex is adjacent to its own indicator.
    Neighbor,
    /// A path `X *-> V1 <-> .. <-> Vk <-* R` whose interior vertices are
    /// all substantive colliders.
    ColliderPath,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointViolation {
    /// The substantive vertex that stands for the owner of `indicator`.
    pub cluster: String,
    pub indicator: String,
    pub reason: Reason,
    pub path: Walk,
}

/// How the conditioning set of each denominator factor is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlanketRule {
    /// Every vertex reachable from the indicator along a path whose
    /// interior vertices are all colliders.
    #[default]
    ColliderConnected,
    /// Parents, children, co-parents and bidirected neighbours only.
    Local,
    /// The collider-connected set of the owning vertex instead of the
    /// indicator.
    AroundCluster,
}

/// Resolved conditioning set for one indicator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blanket {
    pub indicator: String,
    /// Fully observed substantive vertices, conditioned on their values.
    pub observed: Vec<String>,
    /// Partially observed ones, conditioned on their proxies.
    pub missing: Vec<String>,
    /// Indicator literals fixed to zero in the factor.
    pub literals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointVerdict {
    pub recoverable: bool,
    pub violations: Vec<JointViolation>,
    pub formula: Option<ProbExpr>,
    pub blankets: Vec<Blanket>,
}

impl JointVerdict {
    pub fn latex(&self) -> Option<String> {
        self.formula.as_ref().map(ProbExpr::latex)
    }
}

/// No indicator may have a self-loop or touch another indicator.
pub fn check_preconditions(g: &MixedGraph) -> Result<()> {
    if !g.class().allows_indicators() {
        return Err(Error::WrongGraphClass {
            expected: "m-admg, m-c-dmg or cm-c-dmg".into(),
            found: g.class().to_string(),
        });
    }
    let rs: BTreeSet<usize> = g.indicators().into_iter().collect();
    for &r in &rs {
        if g.has_directed(r, r) || g.has_bidirected(r, r) {
            return Err(Error::Precondition(format!("indicator `{}` has a self-loop", g.id(r))));
        }
        for &s in &rs {
            if s != r && g.adjacent(r, s) {
                return Err(Error::Precondition(format!(
                    "indicators `{}` and `{}` are adjacent",
                    g.id(r.min(s)),
                    g.id(r.max(s))
                )));
            }
        }
    }
    Ok(())
}

fn single_edge(g: &MixedGraph, h: usize, r: usize) -> Option<Walk> {
    let start = Walk::single(g.id(h));
    [WalkEdge::FORWARD, WalkEdge::BACKWARD, WalkEdge::BIDIRECTED]
        .into_iter()
        .find(|e| e.exists(g, h, r))
        .map(|e| start.then(e, g.id(r)))
}

/// Shortest collider path from `h` to `r` through substantive vertices
/// other than `h`; ties broken by vertex name.
fn collider_path(g: &MixedGraph, h: usize, r: usize) -> Option<Walk> {
    let interior = |v: usize| v != h && g.kind(v).is_substantive();
    let mut prev: BTreeMap<usize, (usize, WalkEdge)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut starts: Vec<(WalkEdge, usize)> = crate::separation::incident(g, h)
        .into_iter()
        .filter(|(e, u)| e.far == Mark::Head && interior(*u))
        .collect();
    starts.sort_by(|a, b| g.id(a.1).cmp(g.id(b.1)).then(a.0.cmp(&b.0)));
    for (e, u) in starts {
        if let std::collections::btree_map::Entry::Vacant(slot) = prev.entry(u) {
            slot.insert((h, e));
            queue.push_back(u);
        }
    }
    while let Some(v) = queue.pop_front() {
        let end = if g.has_directed(r, v) {
            Some(WalkEdge::BACKWARD)
        } else if g.has_bidirected(r, v) {
            Some(WalkEdge::BIDIRECTED)
        } else {
            None
        };
        if let Some(last) = end {
            let mut rev = vec![(last, r)];
            let mut cur = v;
            while cur != h {
                let (p, e) = prev[&cur];
                rev.push((e, cur));
                cur = p;
            }
            let mut w = Walk::single(g.id(h));
            for (e, u) in rev.into_iter().rev() {
                w.push(e, g.id(u));
            }
            return Some(w);
        }
        let mut next: Vec<usize> = g.siblings(v).iter().copied().filter(|&u| interior(u)).collect();
        next.sort_by(|a, b| g.id(*a).cmp(g.id(*b)));
        for u in next {
            if let std::collections::btree_map::Entry::Vacant(slot) = prev.entry(u) {
                slot.insert((v, WalkEdge::BIDIRECTED));
                queue.push_back(u);
            }
        }
    }
    None
}

fn violations_for(g: &MixedGraph, r: usize) -> Vec<JointViolation> {
    let Some(h) = g.host_of_vertex(r) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let make = |reason, path| JointViolation {
        cluster: g.id(h).to_string(),
        indicator: g.id(r).to_string(),
        reason,
        path,
    };
    if let Some(p) = single_edge(g, h, r) {
        out.push(make(Reason::Neighbor, p));
    }
    if let Some(p) = collider_path(g, h, r) {
        out.push(make(Reason::ColliderPath, p));
    }
    out
}

/// All violations of the recoverability criterion, at any level that
/// carries indicators. Indicators are examined in parallel when `mode`
/// allows; results come back in indicator order.
pub fn find_violations(g: &MixedGraph, mode: Parallelism) -> Result<Vec<JointViolation>> {
    check_preconditions(g)?;
    let rs = g.indicators();
    Ok(par::map(mode, &rs, |&r| violations_for(g, r))
        .into_iter()
        .flatten()
        .collect())
}

/// Vertices reachable from `start` along paths whose interior vertices are
/// all colliders, proxies excluded.
fn collider_connected(g: &MixedGraph, start: usize) -> BTreeSet<usize> {
    let n = g.len();
    let mut seen = vec![false; 2 * n];
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::new();
    let step = |v: usize| {
        crate::separation::incident(g, v)
            .into_iter()
            .filter(move |(_, u)| *u != v && g.kind(*u) != Kind::Proxy)
    };
    for (e, u) in step(start) {
        let st = 2 * u + usize::from(e.far == Mark::Head);
        if !seen[st] {
            seen[st] = true;
            queue.push_back(st);
        }
    }
    while let Some(st) = queue.pop_front() {
        let v = st / 2;
        out.insert(v);
        if st % 2 == 0 {
            continue;
        }
        for (e, u) in step(v) {
            if e.near != Mark::Head {
                continue;
            }
            let s2 = 2 * u + usize::from(e.far == Mark::Head);
            if !seen[s2] {
                seen[s2] = true;
                queue.push_back(s2);
            }
        }
    }
    out.remove(&start);
    out
}

fn local_blanket(g: &MixedGraph, r: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    out.extend(g.parents(r));
    out.extend(g.siblings(r));
    for &c in g.children(r) {
        if g.kind(c) == Kind::Proxy {
            continue;
        }
        out.insert(c);
        out.extend(g.parents(c));
    }
    out.retain(|&v| v != r && g.kind(v) != Kind::Proxy);
    out
}

pub fn markov_blanket(g: &MixedGraph, r: usize, rule: BlanketRule) -> BTreeSet<usize> {
    match rule {
        BlanketRule::ColliderConnected => collider_connected(g, r),
        BlanketRule::Local => local_blanket(g, r),
        BlanketRule::AroundCluster => match g.host_of_vertex(r) {
            Some(h) => {
                let mut s = collider_connected(g, h);
                s.remove(&r);
                s
            }
            None => BTreeSet::new(),
        },
    }
}

fn blanket(g: &MixedGraph, r: usize, rule: BlanketRule, missing: &BTreeSet<usize>) -> Blanket {
    let mb = markov_blanket(g, r, rule);
    let mut observed = Vec::new();
    let mut miss = Vec::new();
    let mut literals: BTreeSet<String> = BTreeSet::new();
    for &v in &mb {
        if g.kind(v).is_substantive() {
            if missing.contains(&v) {
                miss.push(g.id(v).to_string());
                literals.extend(g.indicators_of_substantive(v).into_iter().map(|i| g.id(i).to_string()));
            } else {
                observed.push(g.id(v).to_string());
            }
        } else if g.kind(v) == Kind::Indicator {
            literals.insert(g.id(v).to_string());
        }
    }
    literals.remove(g.id(r));
    Blanket {
        indicator: g.id(r).to_string(),
        observed,
        missing: miss,
        literals: literals.into_iter().collect(),
    }
}

/// The factorized formula for `P(V)` under a given blanket rule.
pub fn joint_formula(g: &MixedGraph, rule: BlanketRule) -> (ProbExpr, Vec<Blanket>) {
    let missing = g.partially_observed();
    let mut outcomes: Vec<Atom> = g
        .substantive()
        .into_iter()
        .map(|v| {
            if missing.contains(&v) {
                Atom::proxy(g.id(v))
            } else {
                Atom::value(g.id(v))
            }
        })
        .collect();
    let rs = g.indicators();
    outcomes.extend(rs.iter().map(|&r| Atom::observed(g.id(r))));
    let num: ProbExpr = Term::new(outcomes, Vec::<String>::new(), Vec::new()).into();
    let blankets: Vec<Blanket> = rs.iter().map(|&r| blanket(g, r, rule, &missing)).collect();
    let factors: Vec<ProbExpr> = blankets
        .iter()
        .map(|b| {
            let cond = b
                .observed
                .iter()
                .map(Atom::value)
                .chain(b.missing.iter().map(Atom::proxy))
                .chain(b.literals.iter().map(Atom::observed));
            Term::new([Atom::observed(&b.indicator)], Vec::<String>::new(), cond).into()
        })
        .collect();
    let expr = ProbExpr::quotient(num, ProbExpr::Product(factors)).canonical();
    (expr, blankets)
}

pub fn check_joint(g: &MixedGraph) -> Result<JointVerdict> {
    check_joint_with(g, BlanketRule::default(), Parallelism::best())
}

pub fn check_joint_with(g: &MixedGraph, rule: BlanketRule, mode: Parallelism) -> Result<JointVerdict> {
    if !matches!(g.class(), GraphClass::MCDmg | GraphClass::CmCDmg) {
        return Err(Error::WrongGraphClass {
            expected: "m-c-dmg or cm-c-dmg".into(),
            found: g.class().to_string(),
        });
    }
    let violations = find_violations(g, mode)?;
    if !violations.is_empty() {
        return Ok(JointVerdict {
            recoverable: false,
            violations,
            formula: None,
            blankets: Vec::new(),
        });
    }
    let (formula, blankets) = joint_formula(g, rule);
    Ok(JointVerdict {
        recoverable: true,
        violations,
        formula: Some(formula),
        blankets,
    })
}

/// Smallest compatible variable-level graph (by vertex count, then edge
/// count) in which a member of `violation.cluster` violates the criterion
/// itself. Every self-looped cluster needs two members, so the search
/// starts there.
/// Fully observed variables downstream of a partially observed one. Such
/// a child works as a measurement of its masked ancestor and can pin the
/// joint down at small cardinalities, so witnesses avoid them.
fn measured(g: &MixedGraph) -> usize {
    let masked = g.partially_observed();
    descendants_ix(g, &masked)
        .iter()
        .filter(|&&v| g.kind(v).is_substantive() && !masked.contains(&v))
        .count()
}

pub fn construct_witness(g: &MixedGraph, violation: &JointViolation) -> Result<MixedGraph> {
    let min_edges = g.directed_edges().len() + g.bidirected_edges().len();
    let max_vars = 2;
    for extra in 0..=4 {
        let budget = Budget::new(max_vars).max_edges(min_edges + extra);
        let mut best: Option<((usize, usize, usize), MixedGraph)> = None;
        let res = for_each_compatible(g, &budget, |cand| {
            let key = (measured(cand), cand.len(), cand.edge_count());
            if best.as_ref().is_some_and(|(k, _)| *k <= key) {
                return ControlFlow::Continue(());
            }
            let Ok(clustering) = infer_clustering(g, cand) else {
                return ControlFlow::Continue(());
            };
            let hit = find_violations(cand, Parallelism::Sequential)
                .unwrap_or_default()
                .iter()
                .any(|v| {
                    v.cluster == violation.cluster
                        || clustering.cluster_of(&v.cluster) == Some(violation.cluster.as_str())
                });
            if hit {
                best = Some((key, cand.clone()));
            }
            ControlFlow::Continue(())
        });
        match res {
            Ok(_) | Err(Error::BudgetTooSmall(_)) => {}
            Err(e) => return Err(e),
        }
        if let Some((_, w)) = best {
            return Ok(w);
        }
    }
    Err(Error::BudgetTooSmall(format!(
        "no compatible graph with at most {max_vars} variables per cluster exhibits the violation at `{}`",
        violation.cluster
    )))
}
