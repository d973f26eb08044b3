use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GraphClass, Kind, MixedGraph};

/// One broken invariant together with the vertices involved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub vertices: Vec<String>,
}

impl Violation {
    pub fn new<I, S>(rule: &str, vertices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Violation {
            rule: rule.to_string(),
            vertices: vertices.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vertices.is_empty() {
            f.write_str(&self.rule)
        } else {
            write!(f, "{}: {}", self.rule, self.vertices.join(","))
        }
    }
}

/// Checks every invariant of the graph's declared class. An empty result
/// means the graph is well formed.
pub fn validate(g: &MixedGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let class = g.class();

    for v in g.vertices() {
        match v.kind {
            Kind::Variable if class.is_cluster_level() => out.push(Violation::new(
                "variable vertex in cluster-level graph",
                [v.id.as_str()],
            )),
            Kind::Cluster if !class.is_cluster_level() => out.push(Violation::new(
                "cluster vertex in variable-level graph",
                [v.id.as_str()],
            )),
            Kind::Indicator | Kind::Proxy if !class.allows_indicators() => out.push(Violation::new(
                "missingness vertex in graph without indicators",
                [v.id.as_str()],
            )),
            _ => {}
        }
    }

    check_owners(g, &mut out);
    check_proxies(g, &mut out);
    if !class.is_cluster_level() {
        for scc in directed_cycles(g) {
            out.push(Violation::new("acyclicity violated", scc));
        }
    }
    out
}

fn check_owners(g: &MixedGraph, out: &mut Vec<Violation>) {
    let class = g.class();
    let mut seen_ind = BTreeSet::new();
    let mut seen_proxy = BTreeSet::new();
    for i in 0..g.len() {
        let kind = g.kind(i);
        if !matches!(kind, Kind::Indicator | Kind::Proxy) {
            continue;
        }
        let id = g.id(i);
        let Some(owner) = g.owner(i) else {
            out.push(Violation::new("missingness vertex without owner", [id]));
            continue;
        };
        let seen = if kind == Kind::Indicator {
            &mut seen_ind
        } else {
            &mut seen_proxy
        };
        if !seen.insert(owner.to_string()) {
            let what = if kind == Kind::Indicator {
                "more than one indicator for owner"
            } else {
                "more than one proxy for owner"
            };
            out.push(Violation::new(what, [owner, id]));
        }
        let owner_vertex = g.vertex(owner).map(|v| v.kind);
        let is_member = g.clustering().cluster_of(owner).is_some();
        let ok = match class {
            GraphClass::MAdmg => owner_vertex == Some(Kind::Variable),
            GraphClass::MCDmg => is_member,
            GraphClass::CmCDmg => owner_vertex == Some(Kind::Cluster),
            GraphClass::Admg | GraphClass::CDmg => true,
        };
        if !ok && kind == Kind::Indicator {
            let rule = match class {
                GraphClass::MAdmg => "indicator owner must be a variable",
                GraphClass::MCDmg => "indicator owner must be a cluster member variable",
                _ => "indicator owner must be a cluster",
            };
            out.push(Violation::new(rule, [id, owner]));
        }
    }
    for i in g.indicators() {
        let owner = g.owner(i).unwrap_or_default();
        if g.proxy_of(owner).is_none() {
            out.push(Violation::new("indicator without proxy", [g.id(i)]));
        }
    }
    for p in g.proxies() {
        let owner = g.owner(p).unwrap_or_default();
        if g.indicator_of(owner).is_none() {
            out.push(Violation::new("proxy without indicator", [g.id(p)]));
        }
    }
}

fn check_proxies(g: &MixedGraph, out: &mut Vec<Violation>) {
    for p in g.proxies() {
        let id = g.id(p);
        if !g.children(p).is_empty() {
            let mut vs = vec![id.to_string()];
            vs.extend(g.children(p).iter().map(|&c| g.id(c).to_string()));
            out.push(Violation::new("proxy has child", vs));
        }
        if !g.siblings(p).is_empty() {
            let mut vs = vec![id.to_string()];
            vs.extend(g.siblings(p).iter().map(|&c| g.id(c).to_string()));
            out.push(Violation::new("proxy has bidirected edge", vs));
        }
        let owner = g.owner(p).unwrap_or_default();
        let expected: BTreeSet<usize> = [g.host_of(owner), g.indicator_of(owner)]
            .into_iter()
            .flatten()
            .collect();
        let actual: BTreeSet<usize> = g.parents(p).iter().copied().collect();
        if expected.len() != 2 || actual != expected {
            out.push(Violation::new(
                "proxy must have exactly its owner and indicator as parents",
                [id],
            ));
        }
    }
    for &(a, b) in g.directed_ix() {
        if g.kind(a) == Kind::Proxy && g.kind(b) == Kind::Proxy {
            out.push(Violation::new("edge between proxies", [g.id(a), g.id(b)]));
        }
    }
    for &(a, b) in g.bidirected_ix() {
        if g.kind(a) == Kind::Proxy && g.kind(b) == Kind::Proxy {
            out.push(Violation::new("edge between proxies", [g.id(a), g.id(b)]));
        }
    }
}

/// Vertex sets (sorted by id) of non-proxy strongly connected components
/// that contain a directed cycle, self-loops included.
pub(crate) fn directed_cycles(g: &MixedGraph) -> Vec<Vec<String>> {
    let n = g.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = g.children(s).to_vec();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend_from_slice(g.children(v));
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for v in 0..n {
        if assigned[v] || g.kind(v) == Kind::Proxy || !reach[v][v] {
            continue;
        }
        let mut scc: Vec<String> = (0..n)
            .filter(|&u| reach[v][u] && reach[u][v])
            .inspect(|&u| assigned[u] = true)
            .map(|u| g.id(u).to_string())
            .collect();
        scc.sort();
        out.push(scc);
    }
    out.sort();
    out
}
