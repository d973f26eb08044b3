//! Projection of variable-level graphs onto clusters, the merge map `pi`
//! from m-C-DMGs to cm-C-DMGs, and compatibility between levels.

mod enumerate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Clustering, GraphBuilder, GraphClass, Kind, MixedGraph};

pub use enumerate::{
    count_compatible, enumerate_compatible, for_each_compatible, infer_clustering, sample_compatible, Budget,
};

/// Target abstraction level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    CDmg,
    MCDmg,
    CmCDmg,
}

impl Level {
    pub fn of(class: GraphClass) -> Result<Self> {
        match class {
            GraphClass::CDmg => Ok(Level::CDmg),
            GraphClass::MCDmg => Ok(Level::MCDmg),
            GraphClass::CmCDmg => Ok(Level::CmCDmg),
            other => Err(Error::WrongGraphClass {
                expected: "c-dmg, m-c-dmg or cm-c-dmg".into(),
                found: other.to_string(),
            }),
        }
    }

    pub fn class(self) -> GraphClass {
        match self {
            Level::CDmg => GraphClass::CDmg,
            Level::MCDmg => GraphClass::MCDmg,
            Level::CmCDmg => GraphClass::CmCDmg,
        }
    }
}

/// A vertex or edge named in a compatibility report.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Item {
    Vertex { id: String },
    Directed { from: String, to: String },
    Bidirected { a: String, b: String },
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Vertex { id } => write!(f, "vertex {id}"),
            Item::Directed { from, to } => write!(f, "{from} -> {to}"),
            Item::Bidirected { a, b } => write!(f, "{a} <-> {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    /// Abstract vertices and edges with no variable-level realization.
    pub missing_realizations: Vec<Item>,
    /// Variable-level vertices and edges the abstract graph does not license.
    pub forbidden_edges: Vec<Item>,
}

/// Name of the cluster-level indicator of `cluster`.
pub fn cluster_indicator_name(cluster: &str) -> String {
    format!("R_{cluster}")
}

/// Maps each non-proxy vertex of a variable-level graph to its image at
/// `level`.
fn role_map(g: &MixedGraph, clustering: &Clustering, level: Level) -> Result<BTreeMap<usize, String>> {
    let vars: Vec<&str> = g
        .vertices()
        .iter()
        .filter(|v| v.kind == Kind::Variable)
        .map(|v| v.id.as_str())
        .collect();
    clustering.check_covers(vars)?;
    let mut roles = BTreeMap::new();
    for i in 0..g.len() {
        let v = &g.vertices()[i];
        let role = match v.kind {
            Kind::Variable => clustering.cluster_of(&v.id).expect("covered").to_string(),
            Kind::Indicator => {
                let owner = v.owner.as_deref().unwrap_or_default();
                match level {
                    Level::CDmg => {
                        return Err(Error::WrongGraphClass {
                            expected: "graph without indicators".into(),
                            found: g.class().to_string(),
                        })
                    }
                    Level::MCDmg => v.id.clone(),
                    Level::CmCDmg => cluster_indicator_name(
                        clustering
                            .cluster_of(owner)
                            .ok_or_else(|| Error::InvalidClustering(format!("owner `{owner}` is not clustered")))?,
                    ),
                }
            }
            Kind::Proxy => continue,
            Kind::Cluster => {
                return Err(Error::WrongGraphClass {
                    expected: "admg or m-admg".into(),
                    found: g.class().to_string(),
                })
            }
        };
        roles.insert(i, role);
    }
    Ok(roles)
}

/// Projects an m-ADMG (or ADMG) onto `clustering`.
pub fn project(madmg: &MixedGraph, clustering: &Clustering, level: Level) -> Result<MixedGraph> {
    if !matches!(madmg.class(), GraphClass::Admg | GraphClass::MAdmg) {
        return Err(Error::WrongGraphClass {
            expected: "admg or m-admg".into(),
            found: madmg.class().to_string(),
        });
    }
    let roles = role_map(madmg, clustering, level)?;
    let mut b = GraphBuilder::new(madmg.name(), level.class());
    for (c, members) in clustering.iter() {
        b.add_cluster(c, members.iter().cloned());
    }
    let mut indicators: BTreeMap<String, String> = BTreeMap::new();
    for r in madmg.indicators() {
        let owner = madmg.owner(r).unwrap_or_default().to_string();
        match level {
            Level::MCDmg => {
                indicators.insert(madmg.id(r).to_string(), owner);
            }
            _ => {
                let c = clustering.cluster_of(&owner).expect("checked").to_string();
                indicators.insert(cluster_indicator_name(&c), c);
            }
        }
    }
    for (id, owner) in &indicators {
        b.add_indicator(id.clone(), owner.clone(), None);
    }
    add_projected_edges(madmg, &roles, &mut b);
    b.build()
}

fn add_projected_edges(g: &MixedGraph, roles: &BTreeMap<usize, String>, b: &mut GraphBuilder) {
    let mut directed = BTreeSet::new();
    let mut bidirected = BTreeSet::new();
    for &(a, c) in g.directed_ix() {
        if let (Some(ra), Some(rc)) = (roles.get(&a), roles.get(&c)) {
            directed.insert((ra.clone(), rc.clone()));
        }
    }
    for &(a, c) in g.bidirected_ix() {
        if let (Some(ra), Some(rc)) = (roles.get(&a), roles.get(&c)) {
            let (x, y) = if ra <= rc { (ra, rc) } else { (rc, ra) };
            bidirected.insert((x.clone(), y.clone()));
        }
    }
    for (x, y) in directed {
        b.add_edge(x, y);
    }
    for (x, y) in bidirected {
        b.add_biedge(x, y);
    }
}

/// Merges the variable-level indicators of each cluster into one
/// cluster-level indicator. The identity on cm-C-DMGs.
pub fn pi(g: &MixedGraph) -> Result<MixedGraph> {
    match g.class() {
        GraphClass::CmCDmg => return Ok(g.clone()),
        GraphClass::MCDmg => {}
        other => {
            return Err(Error::WrongGraphClass {
                expected: "m-c-dmg".into(),
                found: other.to_string(),
            })
        }
    }
    let mut roles = BTreeMap::new();
    let mut indicators = BTreeSet::new();
    for i in 0..g.len() {
        match g.kind(i) {
            Kind::Cluster => {
                roles.insert(i, g.id(i).to_string());
            }
            Kind::Indicator => {
                let owner = g.owner(i).unwrap_or_default();
                let c = g
                    .clustering()
                    .cluster_of(owner)
                    .ok_or_else(|| Error::InvalidClustering(format!("`{owner}` is not clustered")))?;
                indicators.insert(c.to_string());
                roles.insert(i, cluster_indicator_name(c));
            }
            _ => {}
        }
    }
    let mut b = GraphBuilder::new(g.name(), GraphClass::CmCDmg);
    for (c, members) in g.clustering().iter() {
        b.add_cluster(c, members.iter().cloned());
    }
    for c in indicators {
        b.add_indicator(cluster_indicator_name(&c), c, None);
    }
    add_projected_edges(g, &roles, &mut b);
    b.build()
}

/// Non-proxy vertex ids by kind, plus non-proxy edge sets, for comparing
/// graphs over the same role names.
struct Shape {
    vertices: BTreeSet<String>,
    directed: BTreeSet<(String, String)>,
    bidirected: BTreeSet<(String, String)>,
}

fn shape(g: &MixedGraph) -> Shape {
    let keep = |id: &str| g.vertex(id).is_some_and(|v| v.kind != Kind::Proxy);
    Shape {
        vertices: g
            .vertices()
            .iter()
            .filter(|v| v.kind != Kind::Proxy)
            .map(|v| v.id.clone())
            .collect(),
        directed: g
            .directed_edges()
            .into_iter()
            .filter(|(a, b)| keep(a) && keep(b))
            .collect(),
        bidirected: g.bidirected_edges().into_iter().collect(),
    }
}

/// Whether `madmg` projects onto exactly the vertices and edges of
/// `abstract_graph` under `clustering`.
pub fn is_compatible(
    madmg: &MixedGraph,
    abstract_graph: &MixedGraph,
    clustering: &Clustering,
) -> Result<CompatibilityReport> {
    let level = Level::of(abstract_graph.class())?;
    let abs_clusters: BTreeSet<&str> = abstract_graph.clustering().cluster_ids().collect();
    let my_clusters: BTreeSet<&str> = clustering.cluster_ids().collect();
    if abs_clusters != my_clusters {
        return Err(Error::InvalidClustering(
            "cluster names differ from the abstract graph".into(),
        ));
    }
    let mut roles = role_map(madmg, clustering, level)?;
    if level == Level::CmCDmg {
        for r in madmg.indicators() {
            let owner = madmg.owner(r).unwrap_or_default();
            if let Some(c) = clustering.cluster_of(owner) {
                if let Some(ar) = abstract_graph.indicator_of(c) {
                    roles.insert(r, abstract_graph.id(ar).to_string());
                }
            }
        }
    }
    let want = shape(abstract_graph);

    let mut forbidden = Vec::new();
    let mut have_v: BTreeSet<String> = clustering.cluster_ids().map(String::from).collect();
    let mut have_d = BTreeSet::new();
    let mut have_b = BTreeSet::new();
    for r in madmg.indicators() {
        let role = &roles[&r];
        if !want.vertices.contains(role) {
            forbidden.push(Item::Vertex {
                id: madmg.id(r).to_string(),
            });
        }
        have_v.insert(role.clone());
    }
    for (a, c) in madmg.directed_ix().iter().copied() {
        let (Some(ra), Some(rc)) = (roles.get(&a), roles.get(&c)) else {
            continue;
        };
        let e = (ra.clone(), rc.clone());
        if !want.directed.contains(&e) {
            forbidden.push(Item::Directed {
                from: madmg.id(a).to_string(),
                to: madmg.id(c).to_string(),
            });
        }
        have_d.insert(e);
    }
    for (a, c) in madmg.bidirected_ix().iter().copied() {
        let (Some(ra), Some(rc)) = (roles.get(&a), roles.get(&c)) else {
            continue;
        };
        let e = if ra <= rc {
            (ra.clone(), rc.clone())
        } else {
            (rc.clone(), ra.clone())
        };
        if !want.bidirected.contains(&e) {
            let (x, y) = (madmg.id(a).to_string(), madmg.id(c).to_string());
            forbidden.push(Item::Bidirected { a: x, b: y });
        }
        have_b.insert(e);
    }

    let mut missing = Vec::new();
    for v in want.vertices.difference(&have_v) {
        missing.push(Item::Vertex { id: v.clone() });
    }
    for (a, b) in want.directed.difference(&have_d) {
        missing.push(Item::Directed {
            from: a.clone(),
            to: b.clone(),
        });
    }
    for (a, b) in want.bidirected.difference(&have_b) {
        missing.push(Item::Bidirected {
            a: a.clone(),
            b: b.clone(),
        });
    }
    forbidden.sort();
    missing.sort();
    Ok(CompatibilityReport {
        compatible: forbidden.is_empty() && missing.is_empty(),
        missing_realizations: missing,
        forbidden_edges: forbidden,
    })
}
