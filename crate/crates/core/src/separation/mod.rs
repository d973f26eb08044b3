//! Reachability, mutilation and d-separation on possibly cyclic mixed
//! graphs.
//!
//! [`d_separation`] runs a walk-state search over `(vertex, arrived with an
//! arrowhead)` pairs. A state is expanded at most once, so self-loops and
//! directed cycles terminate. A non-collider passes when it is not
//! conditioned on; a collider passes when it is an ancestor of the
//! conditioning set. The path-enumeration oracle in [`paths`] checks the
//! same relation by brute force.

pub mod paths;
pub mod walk;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Kind, Mark, MixedGraph};

pub use paths::{enumerate_paths, enumerate_paths_with, path_active, PathFilter};
pub use walk::{primary_path, Walk, WalkEdge};

/// Vertex sets to overline (cut incoming) and underline (cut outgoing).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MutilationSpec {
    pub remove_incoming: BTreeSet<String>,
    pub remove_outgoing: BTreeSet<String>,
}

impl MutilationSpec {
    pub fn overline<I, S>(vs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        MutilationSpec {
            remove_incoming: vs.into_iter().map(Into::into).collect(),
            remove_outgoing: BTreeSet::new(),
        }
    }

    pub fn underline<I, S>(vs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        MutilationSpec {
            remove_incoming: BTreeSet::new(),
            remove_outgoing: vs.into_iter().map(Into::into).collect(),
        }
    }

    pub fn and_underline<I, S>(mut self, vs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.remove_outgoing.extend(vs.into_iter().map(Into::into));
        self
    }

    pub fn and_overline<I, S>(mut self, vs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.remove_incoming.extend(vs.into_iter().map(Into::into));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.remove_incoming.is_empty() && self.remove_outgoing.is_empty()
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if !self.remove_incoming.is_empty() {
            let v: Vec<&str> = self.remove_incoming.iter().map(String::as_str).collect();
            parts.push(format!("overline({})", v.join(",")));
        }
        if !self.remove_outgoing.is_empty() {
            let v: Vec<&str> = self.remove_outgoing.iter().map(String::as_str).collect();
            parts.push(format!("underline({})", v.join(",")));
        }
        if parts.is_empty() {
            "G".into()
        } else {
            format!("G[{}]", parts.join(" "))
        }
    }
}

pub(crate) fn resolve<I, S>(g: &MixedGraph, ids: I) -> Result<BTreeSet<usize>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    ids.into_iter().map(|s| g.index_of(s.as_ref())).collect()
}

/// Reflexive closure of `s` under directed edges (child direction).
pub fn descendants_ix(g: &MixedGraph, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    closure(s, |v| g.children(v))
}

/// Reflexive closure of `s` under directed edges (parent direction).
pub fn ancestors_ix(g: &MixedGraph, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    closure(s, |v| g.parents(v))
}

fn closure<'g, F>(s: &BTreeSet<usize>, step: F) -> BTreeSet<usize>
where
    F: Fn(usize) -> &'g [usize],
{
    let mut out = s.clone();
    let mut stack: Vec<usize> = s.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &u in step(v) {
            if out.insert(u) {
                stack.push(u);
            }
        }
    }
    out
}

pub fn descendants<I, S>(g: &MixedGraph, s: I) -> Result<BTreeSet<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Ok(g.ids_of(&descendants_ix(g, &resolve(g, s)?)))
}

pub fn ancestors<I, S>(g: &MixedGraph, s: I) -> Result<BTreeSet<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Ok(g.ids_of(&ancestors_ix(g, &resolve(g, s)?)))
}

/// Removes edges into overlined vertices (directed, bidirected, self-loops)
/// and edges out of underlined ones. Owner-to-proxy and
/// indicator-to-proxy edges are never removed.
pub fn mutilate(g: &MixedGraph, spec: &MutilationSpec) -> Result<MixedGraph> {
    let inc = resolve(g, &spec.remove_incoming)?;
    let out = resolve(g, &spec.remove_outgoing)?;
    if let Some(&p) = inc.iter().chain(&out).find(|&&v| g.kind(v) == Kind::Proxy) {
        return Err(Error::Precondition(format!("proxy `{}` cannot be mutilated", g.id(p))));
    }
    Ok(mutilate_ix(g, &inc, &out))
}

pub(crate) fn mutilate_ix(g: &MixedGraph, inc: &BTreeSet<usize>, out: &BTreeSet<usize>) -> MixedGraph {
    let directed = g
        .directed_ix()
        .iter()
        .copied()
        .filter(|&(a, b)| {
            if g.kind(b) == Kind::Proxy {
                return true;
            }
            !inc.contains(&b) && !out.contains(&a)
        })
        .collect();
    let bidirected = g
        .bidirected_ix()
        .iter()
        .copied()
        .filter(|&(a, b)| !inc.contains(&a) && !inc.contains(&b))
        .collect();
    g.with_edges(directed, bidirected)
}

/// Result of a separation query. `witness_path` is an active path between
/// the sets when they are not separated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub separated: bool,
    pub witness_path: Option<Walk>,
}

fn check_disjoint(g: &MixedGraph, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Result<()> {
    for (a, b) in [(x, y), (x, z), (y, z)] {
        if let Some(&v) = a.intersection(b).next() {
            return Err(Error::OverlappingSets(g.id(v).to_string()));
        }
    }
    Ok(())
}

pub fn d_separated<X, Y, Z, A, B, C>(g: &MixedGraph, x: X, y: Y, z: Z) -> Result<bool>
where
    X: IntoIterator<Item = A>,
    Y: IntoIterator<Item = B>,
    Z: IntoIterator<Item = C>,
    A: AsRef<str>,
    B: AsRef<str>,
    C: AsRef<str>,
{
    Ok(d_separation(g, x, y, z)?.separated)
}

pub fn d_separation<X, Y, Z, A, B, C>(g: &MixedGraph, x: X, y: Y, z: Z) -> Result<Separation>
where
    X: IntoIterator<Item = A>,
    Y: IntoIterator<Item = B>,
    Z: IntoIterator<Item = C>,
    A: AsRef<str>,
    B: AsRef<str>,
    C: AsRef<str>,
{
    let (x, y, z) = (resolve(g, x)?, resolve(g, y)?, resolve(g, z)?);
    check_disjoint(g, &x, &y, &z)?;
    Ok(match active_walk_ix(g, &x, &y, &z) {
        None => Separation {
            separated: true,
            witness_path: None,
        },
        Some(w) => Separation {
            separated: false,
            witness_path: Some(primary_path(&w).expect("nonempty walk")),
        },
    })
}

/// Index-level query without overlap checks (callers guarantee
/// disjointness).
pub fn d_separated_ix(g: &MixedGraph, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    active_walk_ix(g, x, y, z).is_none()
}

/// Incident edges of `v` oriented away from it, in deterministic order.
pub(crate) fn incident(g: &MixedGraph, v: usize) -> Vec<(WalkEdge, usize)> {
    let mut out: Vec<(WalkEdge, usize)> = Vec::new();
    for &c in g.children(v) {
        out.push((WalkEdge::FORWARD, c));
    }
    for &p in g.parents(v) {
        out.push((WalkEdge::BACKWARD, p));
    }
    for &s in g.siblings(v) {
        out.push((WalkEdge::BIDIRECTED, s));
    }
    out.sort_by(|a, b| g.id(a.1).cmp(g.id(b.1)).then(a.0.cmp(&b.0)));
    out
}

fn active_walk_ix(g: &MixedGraph, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Option<Walk> {
    if x.is_empty() || y.is_empty() {
        return None;
    }
    let n = g.len();
    let an_z = ancestors_ix(g, z);
    // state = 2 * v + (arrived with head); start states use a sentinel.
    let mut prev: Vec<Option<(usize, WalkEdge)>> = vec![None; 2 * n];
    let mut seen = vec![false; 2 * n];
    let mut queue = VecDeque::new();
    let mut start_of: Vec<Option<usize>> = vec![None; 2 * n];
    for &s in x {
        for (e, u) in incident(g, s) {
            let st = 2 * u + usize::from(e.far == Mark::Head);
            if !seen[st] {
                seen[st] = true;
                start_of[st] = Some(s);
                prev[st] = Some((usize::MAX, e));
                queue.push_back(st);
            }
        }
    }
    while let Some(st) = queue.pop_front() {
        let v = st / 2;
        if y.contains(&v) {
            return Some(rebuild(g, st, &prev, &start_of));
        }
        let head_in = st % 2 == 1;
        // Endpoints in X may be revisited freely; they are not interior on
        // the extracted path.
        for (e, u) in incident(g, v) {
            let collider = head_in && e.near == Mark::Head;
            let pass = if collider { an_z.contains(&v) } else { !z.contains(&v) };
            if !pass {
                continue;
            }
            let nst = 2 * u + usize::from(e.far == Mark::Head);
            if !seen[nst] {
                seen[nst] = true;
                prev[nst] = Some((st, e));
                queue.push_back(nst);
            }
        }
    }
    None
}

fn rebuild(g: &MixedGraph, end: usize, prev: &[Option<(usize, WalkEdge)>], start_of: &[Option<usize>]) -> Walk {
    let mut rev: Vec<(usize, WalkEdge)> = Vec::new();
    let mut st = end;
    let start = loop {
        let (p, e) = prev[st].expect("reached state has a predecessor");
        rev.push((st / 2, e));
        if p == usize::MAX {
            break start_of[st].expect("start state records its source");
        }
        st = p;
    };
    let mut w = Walk::single(g.id(start));
    for (v, e) in rev.into_iter().rev() {
        w.push(e, g.id(v));
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::parse::parse_graph;

    const NONE: [&str; 0] = [];

    #[test]
    fn descendants_under_cycles() {
        let g = parse_graph(fixtures::FIG2B).unwrap();
        let d = descendants(&g, ["CX"]).unwrap();
        let non_proxy: BTreeSet<&str> = d.iter().map(String::as_str).filter(|v| !v.ends_with('*')).collect();
        assert_eq!(non_proxy, BTreeSet::from(["CX", "CY", "CZ", "R_CX"]));
        assert!(descendants(&g, NONE).unwrap().is_empty());
    }

    #[test]
    fn overline_removes_incoming_and_self_loop() {
        let g = parse_graph(fixtures::FIG3).unwrap();
        let m = mutilate(&g, &MutilationSpec::overline(["CX"])).unwrap();
        let e = m.directed_edges();
        assert!(!e.contains(&("CZ".into(), "CX".into())));
        assert!(!e.contains(&("CX".into(), "CX".into())));
        assert!(e.contains(&("CX".into(), "CY".into())));
        assert_eq!(descendants(&m, ["CZ"]).unwrap(), BTreeSet::from(["CZ".to_string()]));
        assert_eq!(mutilate(&g, &MutilationSpec::default()).unwrap(), g);
    }

    #[test]
    fn underline_keeps_proxy_edges() {
        let g = parse_graph(fixtures::FIG2B).unwrap();
        let m = mutilate(&g, &MutilationSpec::underline(["CX"])).unwrap();
        let e = m.directed_edges();
        for gone in [("CX", "CY"), ("CX", "CZ"), ("CX", "CX")] {
            assert!(!e.contains(&(gone.0.into(), gone.1.into())));
        }
        assert!(e.contains(&("CX".into(), "CX*".into())));
    }

    #[test]
    fn example_separations() {
        let g = parse_graph(fixtures::FIG2B).unwrap();
        let m = mutilate(&g, &MutilationSpec::overline(["CX"])).unwrap();
        assert!(d_separated(&m, ["CY"], ["R_CY"], ["CX"]).unwrap());

        let g3 = parse_graph(fixtures::FIG3).unwrap();
        let s = d_separation(&g3, ["CY"], ["R_CY"], NONE).unwrap();
        assert!(!s.separated);
        let w = s.witness_path.unwrap();
        assert!(w.is_path() && w.is_valid_in(&g3));
    }

    #[test]
    fn overlapping_sets_rejected() {
        let g = parse_graph(fixtures::FIG3).unwrap();
        assert!(matches!(
            d_separated(&g, ["CY"], ["CY"], NONE),
            Err(Error::OverlappingSets(_))
        ));
        assert!(matches!(
            d_separated(&g, ["CQ"], ["CY"], NONE),
            Err(Error::UnknownVertex(_))
        ));
    }
}
