use std::fmt::Write as _;

use serde::Serialize;

use super::{Kind, MixedGraph};

/// Owner-to-proxy and indicator-to-proxy edges, recreated from `rvar`.
fn is_definitional(g: &MixedGraph, a: &str, b: &str) -> bool {
    let (Ok(a), Ok(p)) = (g.index_of(a), g.index_of(b)) else {
        return false;
    };
    if g.kind(p) != Kind::Proxy {
        return false;
    }
    let owner = g.owner(p).unwrap_or_default();
    Some(a) == g.host_of(owner) || Some(a) == g.indicator_of(owner)
}

/// Renders `g` in the `.mcg` format. Proxy edges are implied by `rvar`
/// declarations and are not written.
pub fn emit_graph(g: &MixedGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph \"{}\" class={} {{", g.name(), g.class());
    for (c, members) in g.clustering().iter() {
        let m: Vec<&str> = members.iter().map(String::as_str).collect();
        let _ = writeln!(s, "  cluster {c} {{ vars {} }}", m.join(", "));
    }
    for v in g.vertices().iter().filter(|v| v.kind == Kind::Variable) {
        let _ = writeln!(s, "  var {}", v.id);
    }
    for r in g.indicators() {
        let owner = g.owner(r).unwrap_or_default();
        let _ = write!(s, "  rvar {} for {owner}", g.id(r));
        if let Some(p) = g.proxy_of(owner) {
            if g.id(p) != format!("{owner}*") {
                let _ = write!(s, " proxy {}", g.id(p));
            }
        }
        s.push('\n');
    }
    for (a, b) in g.directed_edges() {
        if is_definitional(g, &a, &b) {
            continue;
        }
        let _ = writeln!(s, "  edge {a} -> {b}");
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(s, "  edge {a} <-> {b}");
    }
    s.push_str("}\n");
    s
}

#[derive(Serialize)]
struct JsonVertex<'a> {
    id: &'a str,
    kind: Kind,
    owner: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    name: &'a str,
    class: super::GraphClass,
    vertices: Vec<JsonVertex<'a>>,
    clusters: std::collections::BTreeMap<&'a str, Vec<&'a str>>,
    directed: Vec<[String; 2]>,
    bidirected: Vec<[String; 2]>,
}

pub fn graph_json(g: &MixedGraph) -> serde_json::Value {
    let mut vertices: Vec<JsonVertex<'_>> = g
        .vertices()
        .iter()
        .map(|v| JsonVertex {
            id: &v.id,
            kind: v.kind,
            owner: v.owner.as_deref(),
        })
        .collect();
    vertices.sort_by(|a, b| a.id.cmp(b.id));
    let doc = JsonGraph {
        name: g.name(),
        class: g.class(),
        vertices,
        clusters: g
            .clustering()
            .iter()
            .map(|(c, m)| (c, m.iter().map(String::as_str).collect()))
            .collect(),
        directed: g.directed_edges().into_iter().map(|(a, b)| [a, b]).collect(),
        bidirected: g.bidirected_edges().into_iter().map(|(a, b)| [a, b]).collect(),
    };
    serde_json::to_value(doc).expect("graph serializes")
}

/// Graphviz rendering: clusters as boxes, indicators as diamonds, proxies
/// dotted, bidirected edges dashed.
pub fn emit_dot(g: &MixedGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", g.name());
    for v in g.vertices() {
        let shape = match v.kind {
            Kind::Cluster => "box",
            Kind::Variable => "ellipse",
            Kind::Indicator => "diamond",
            Kind::Proxy => "ellipse, style=dotted",
        };
        let label = match v.kind {
            Kind::Cluster => {
                let members: Vec<&str> = g
                    .clustering()
                    .members(&v.id)
                    .map(|m| m.iter().map(String::as_str).collect())
                    .unwrap_or_default();
                format!("{}\\n{{{}}}", v.id, members.join(","))
            }
            _ => v.id.clone(),
        };
        let _ = writeln!(s, "  \"{}\" [shape={shape}, label=\"{label}\"];", v.id);
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(s, "  \"{a}\" -> \"{b}\";");
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(s, "  \"{a}\" -> \"{b}\" [dir=both, style=dashed];");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse::parse_graph;

    #[test]
    fn emit_reparses_to_same_graph() {
        let src = crate::fixtures::FIG2A;
        let g = parse_graph(src).unwrap();
        let back = parse_graph(&emit_graph(&g)).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn json_lists_edges_by_name() {
        let g = parse_graph(crate::fixtures::FIG3).unwrap();
        let j = graph_json(&g);
        assert_eq!(j["class"], "cm-c-dmg");
        let bi = j["bidirected"].as_array().unwrap();
        assert!(bi.iter().any(|e| e[0] == "CZ" && e[1] == "R_CY"));
    }

    #[test]
    fn dot_marks_bidirected_dashed() {
        let g = parse_graph(crate::fixtures::FIG3).unwrap();
        assert!(emit_dot(&g).contains("style=dashed"));
    }
}
