//! Brute-force simple-path enumeration, used as the reference for the
//! walk-state engine.

use std::collections::BTreeSet;

use super::{ancestors_ix, incident, resolve, Walk, WalkEdge};
use crate::error::{Error, Result};
use crate::graph::{Kind, Mark, MixedGraph};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathFilter {
    /// Allow proxy vertices strictly inside a path.
    pub proxy_interior: bool,
}

/// All simple paths from `a` to `b` with at most `max_len` edges, proxies
/// excluded from the interior, in lexicographic order.
pub fn enumerate_paths(g: &MixedGraph, a: &str, b: &str, max_len: usize) -> Result<Vec<Walk>> {
    enumerate_paths_with(g, a, b, max_len, PathFilter::default())
}

pub fn enumerate_paths_with(g: &MixedGraph, a: &str, b: &str, max_len: usize, filter: PathFilter) -> Result<Vec<Walk>> {
    let (a, b) = (g.index_of(a)?, g.index_of(b)?);
    if a == b {
        return Err(Error::Precondition("path endpoints must differ".into()));
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; g.len()];
    on_path[a] = true;
    let mut stack: Vec<(WalkEdge, usize)> = Vec::new();
    dfs(g, a, b, max_len, filter, &mut on_path, &mut stack, &mut out);
    Ok(out
        .into_iter()
        .map(|steps| {
            let mut w = Walk::single(g.id(a));
            for (e, v) in steps {
                w.push(e, g.id(v));
            }
            w
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    g: &MixedGraph,
    v: usize,
    target: usize,
    max_len: usize,
    filter: PathFilter,
    on_path: &mut Vec<bool>,
    stack: &mut Vec<(WalkEdge, usize)>,
    out: &mut Vec<Vec<(WalkEdge, usize)>>,
) {
    if stack.len() == max_len {
        return;
    }
    for (e, u) in incident(g, v) {
        if on_path[u] {
            continue;
        }
        stack.push((e, u));
        if u == target {
            out.push(stack.clone());
        } else if filter.proxy_interior || g.kind(u) != Kind::Proxy {
            on_path[u] = true;
            dfs(g, u, target, max_len, filter, on_path, stack, out);
            on_path[u] = false;
        }
        stack.pop();
    }
}

/// Path-level activity given `z`: every non-collider outside `z`, every
/// collider an ancestor of `z` (itself or a descendant in `z`).
pub fn path_active(g: &MixedGraph, path: &Walk, an_z: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    (1..path.vertices.len().saturating_sub(1)).all(|i| {
        let v = g.index_of(&path.vertices[i]).expect("path vertex exists");
        let collider = path.edges[i - 1].far == Mark::Head && path.edges[i].near == Mark::Head;
        if collider {
            an_z.contains(&v)
        } else {
            !z.contains(&v)
        }
    })
}

/// Reference d-separation: every simple path between the sets (any
/// interior, proxies included) is blocked.
pub fn d_separated_by_paths<X, Y, Z, A, B, C>(g: &MixedGraph, x: X, y: Y, z: Z) -> Result<bool>
where
    X: IntoIterator<Item = A>,
    Y: IntoIterator<Item = B>,
    Z: IntoIterator<Item = C>,
    A: AsRef<str>,
    B: AsRef<str>,
    C: AsRef<str>,
{
    let (x, y, z) = (resolve(g, x)?, resolve(g, y)?, resolve(g, z)?);
    Ok(d_separated_by_paths_ix(g, &x, &y, &z))
}

pub fn d_separated_by_paths_ix(g: &MixedGraph, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    let an_z = ancestors_ix(g, z);
    let filter = PathFilter { proxy_interior: true };
    let max_len = g.len().saturating_sub(1);
    for &a in x {
        for &b in y {
            let paths = enumerate_paths_with(g, g.id(a), g.id(b), max_len, filter).expect("distinct endpoints");
            if paths.iter().any(|p| path_active(g, p, &an_z, z)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::parse::parse_graph;

    #[test]
    fn fig3_paths_between_outcome_and_indicator() {
        let g = parse_graph(fixtures::FIG3).unwrap();
        let ps: Vec<String> = enumerate_paths(&g, "CY", "R_CY", 4)
            .unwrap()
            .iter()
            .map(Walk::render)
            .collect();
        assert_eq!(ps, vec!["CY <- CX <- CZ <-> R_CY", "CY <-> CZ <-> R_CY"]);
    }

    #[test]
    fn trivial_cases() {
        let g = parse_graph("graph \"t\" class=admg {\n var A\n var B\n var C\n edge A -> B\n}\n").unwrap();
        assert!(enumerate_paths(&g, "A", "C", 3).unwrap().is_empty());
        let one = enumerate_paths(&g, "A", "B", 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 1);
    }
}
