//! Mixed-graph substrate for every graph class handled by the crate.
//!
//! One [`MixedGraph`] type carries ADMGs, m-ADMGs, C-DMGs, m-C-DMGs and
//! cm-C-DMGs. Vertices are tagged with a [`Kind`]; directed edges are
//! ordered pairs (self-loops allowed and stored as `(v, v)`), bidirected
//! edges are unordered pairs. Graphs are immutable once built; every
//! transformation returns a new graph.
//!
//! Substantive variables of cluster-level graphs are not vertices. They are
//! recorded as cluster members in the graph's [`Clustering`], and a
//! variable-level indicator of an m-C-DMG names such a member as its owner.

pub mod emit;
pub mod mechanism;
pub mod parse;
pub mod random;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use validate::{validate, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphClass {
    #[serde(rename = "admg")]
    Admg,
    #[serde(rename = "m-admg")]
    MAdmg,
    #[serde(rename = "c-dmg")]
    CDmg,
    #[serde(rename = "m-c-dmg")]
    MCDmg,
    #[serde(rename = "cm-c-dmg")]
    CmCDmg,
}

impl GraphClass {
    pub fn keyword(self) -> &'static str {
        match self {
            GraphClass::Admg => "admg",
            GraphClass::MAdmg => "m-admg",
            GraphClass::CDmg => "c-dmg",
            GraphClass::MCDmg => "m-c-dmg",
            GraphClass::CmCDmg => "cm-c-dmg",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "admg" => GraphClass::Admg,
            "m-admg" => GraphClass::MAdmg,
            "c-dmg" => GraphClass::CDmg,
            "m-c-dmg" => GraphClass::MCDmg,
            "cm-c-dmg" => GraphClass::CmCDmg,
            _ => return None,
        })
    }

    pub fn is_cluster_level(self) -> bool {
        matches!(self, GraphClass::CDmg | GraphClass::MCDmg | GraphClass::CmCDmg)
    }

    pub fn allows_indicators(self) -> bool {
        matches!(self, GraphClass::MAdmg | GraphClass::MCDmg | GraphClass::CmCDmg)
    }
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Variable,
    Cluster,
    Indicator,
    Proxy,
}

impl Kind {
    pub fn is_substantive(self) -> bool {
        matches!(self, Kind::Variable | Kind::Cluster)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub kind: Kind,
    /// Indicator: the variable or cluster it masks. Proxy: the variable or
    /// cluster it shadows.
    pub owner: Option<String>,
}

/// Endpoint mark of an edge at one of its vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Head,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Directed,
    Bidirected,
}

/// Partition of substantive variables into named clusters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    clusters: BTreeMap<String, BTreeSet<String>>,
}

impl Clustering {
    pub fn new<I, C, M, V>(clusters: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, M)>,
        C: Into<String>,
        M: IntoIterator<Item = V>,
        V: Into<String>,
    {
        let mut out = BTreeMap::new();
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (c, members) in clusters {
            let c = c.into();
            let members: BTreeSet<String> = members.into_iter().map(Into::into).collect();
            if members.is_empty() {
                return Err(Error::InvalidClustering(format!("cluster `{c}` is empty")));
            }
            for m in &members {
                if let Some(prev) = seen.insert(m.clone(), c.clone()) {
                    return Err(Error::InvalidClustering(format!(
                        "variable `{m}` belongs to both `{prev}` and `{c}`"
                    )));
                }
            }
            if out.insert(c.clone(), members).is_some() {
                return Err(Error::InvalidClustering(format!("cluster `{c}` declared twice")));
            }
        }
        Ok(Clustering { clusters: out })
    }

    /// Every variable in its own cluster, named after the variable.
    pub fn trivial<I, V>(vars: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        let clusters = vars
            .into_iter()
            .map(|v| {
                let v = v.into();
                (v.clone(), BTreeSet::from([v]))
            })
            .collect();
        Clustering { clusters }
    }

    pub fn cluster_of(&self, var: &str) -> Option<&str> {
        self.clusters
            .iter()
            .find(|(_, m)| m.contains(var))
            .map(|(c, _)| c.as_str())
    }

    pub fn members(&self, cluster: &str) -> Option<&BTreeSet<String>> {
        self.clusters.get(cluster)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.clusters.iter().map(|(c, m)| (c.as_str(), m))
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = &str> {
        self.clusters.keys().map(String::as_str)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.clusters.values().flatten().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    /// Checks that the clustering partitions exactly `vars`.
    pub fn check_covers<'a, I>(&self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let vars: BTreeSet<&str> = vars.into_iter().collect();
        let mine: BTreeSet<&str> = self.variables().collect();
        if let Some(v) = vars.difference(&mine).next() {
            return Err(Error::InvalidClustering(format!("variable `{v}` is not clustered")));
        }
        if let Some(v) = mine.difference(&vars).next() {
            return Err(Error::InvalidClustering(format!(
                "clustered name `{v}` is not a variable"
            )));
        }
        Ok(())
    }
}

/// A validated (or, via [`GraphBuilder::build_unchecked`], possibly invalid)
/// mixed graph.
#[derive(Clone, Debug)]
pub struct MixedGraph {
    name: String,
    class: GraphClass,
    vertices: Vec<Vertex>,
    index: BTreeMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    clustering: Clustering,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    siblings: Vec<Vec<usize>>,
}

impl PartialEq for MixedGraph {
    /// Name-preserving structural equality; the graph's display name is
    /// ignored.
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class
            && self.clustering == other.clustering
            && self.sorted_vertices() == other.sorted_vertices()
            && self.directed_edges() == other.directed_edges()
            && self.bidirected_edges() == other.bidirected_edges()
    }
}

impl MixedGraph {
    fn assemble(
        name: String,
        class: GraphClass,
        vertices: Vec<Vertex>,
        directed: BTreeSet<(usize, usize)>,
        bidirected: BTreeSet<(usize, usize)>,
        clustering: Clustering,
    ) -> Self {
        let n = vertices.len();
        let index = vertices.iter().enumerate().map(|(i, v)| (v.id.clone(), i)).collect();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        let mut siblings = vec![Vec::new(); n];
        for &(a, b) in &directed {
            children[a].push(b);
            parents[b].push(a);
        }
        for &(a, b) in &bidirected {
            siblings[a].push(b);
            if a != b {
                siblings[b].push(a);
            }
        }
        MixedGraph {
            name,
            class,
            vertices,
            index,
            directed,
            bidirected,
            clustering,
            children,
            parents,
            siblings,
        }
    }

    /// Same vertices and clustering, new edge sets (indices into this graph).
    pub(crate) fn with_edges(&self, directed: BTreeSet<(usize, usize)>, bidirected: BTreeSet<(usize, usize)>) -> Self {
        Self::assemble(
            self.name.clone(),
            self.class,
            self.vertices.clone(),
            directed,
            bidirected,
            self.clustering.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> GraphClass {
        self.class
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    fn sorted_vertices(&self) -> Vec<&Vertex> {
        let mut v: Vec<&Vertex> = self.vertices.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.index.get(id).map(|&i| &self.vertices[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn indices_of<'a, I>(&self, ids: I) -> Result<BTreeSet<usize>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        ids.into_iter().map(|id| self.index_of(id)).collect()
    }

    pub fn id(&self, ix: usize) -> &str {
        &self.vertices[ix].id
    }

    pub fn kind(&self, ix: usize) -> Kind {
        self.vertices[ix].kind
    }

    pub fn ids_of(&self, set: &BTreeSet<usize>) -> BTreeSet<String> {
        set.iter().map(|&i| self.id(i).to_string()).collect()
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn children(&self, ix: usize) -> &[usize] {
        &self.children[ix]
    }

    pub fn parents(&self, ix: usize) -> &[usize] {
        &self.parents[ix]
    }

    /// Bidirected neighbours.
    pub fn siblings(&self, ix: usize) -> &[usize] {
        &self.siblings[ix]
    }

    pub(crate) fn directed_ix(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub(crate) fn bidirected_ix(&self) -> &BTreeSet<(usize, usize)> {
        &self.bidirected
    }

    pub fn has_directed(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn has_bidirected(&self, a: usize, b: usize) -> bool {
        self.bidirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_bidirected(a, b)
    }

    /// Directed edges by vertex name, sorted.
    pub fn directed_edges(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self
            .directed
            .iter()
            .map(|&(a, b)| (self.id(a).to_string(), self.id(b).to_string()))
            .collect();
        v.sort();
        v
    }

    /// Bidirected edges by vertex name, each pair ordered, sorted.
    pub fn bidirected_edges(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> = self
            .bidirected
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (self.id(a).to_string(), self.id(b).to_string());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        v.sort();
        v
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.bidirected.len()
    }

    pub fn indices_of_kind(&self, kind: Kind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kind(i) == kind).collect()
    }

    pub fn substantive(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kind(i).is_substantive()).collect()
    }

    pub fn indicators(&self) -> Vec<usize> {
        self.indices_of_kind(Kind::Indicator)
    }

    pub fn proxies(&self) -> Vec<usize> {
        self.indices_of_kind(Kind::Proxy)
    }

    pub fn owner(&self, ix: usize) -> Option<&str> {
        self.vertices[ix].owner.as_deref()
    }

    /// Substantive vertex standing for `owner`: the vertex itself when it
    /// exists, else the cluster that has `owner` as a member.
    pub fn host_of(&self, owner: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(owner) {
            if self.kind(i).is_substantive() {
                return Some(i);
            }
        }
        let c = self.clustering.cluster_of(owner)?;
        self.index.get(c).copied()
    }

    /// For an indicator or proxy, the substantive vertex whose value it
    /// concerns.
    pub fn host_of_vertex(&self, ix: usize) -> Option<usize> {
        self.owner(ix).and_then(|o| self.host_of(o))
    }

    pub fn indicator_of(&self, owner: &str) -> Option<usize> {
        (0..self.len()).find(|&i| self.kind(i) == Kind::Indicator && self.owner(i) == Some(owner))
    }

    pub fn proxy_of(&self, owner: &str) -> Option<usize> {
        (0..self.len()).find(|&i| self.kind(i) == Kind::Proxy && self.owner(i) == Some(owner))
    }

    /// Indicators whose owner is represented by substantive vertex `ix`.
    pub fn indicators_of_substantive(&self, ix: usize) -> Vec<usize> {
        self.indicators()
            .into_iter()
            .filter(|&r| self.host_of_vertex(r) == Some(ix))
            .collect()
    }

    /// Substantive vertices with at least one indicator (the partially
    /// observed set).
    pub fn partially_observed(&self) -> BTreeSet<usize> {
        self.indicators()
            .into_iter()
            .filter_map(|r| self.host_of_vertex(r))
            .collect()
    }

    /// Names of the substantive vertices, the vertex domain of formulas.
    pub fn substantive_ids(&self) -> Vec<String> {
        self.substantive().into_iter().map(|i| self.id(i).to_string()).collect()
    }
}

#[derive(Clone, Debug)]
struct IndicatorDecl {
    id: String,
    owner: String,
    proxy: Option<String>,
}

/// Incremental constructor for [`MixedGraph`]. Proxies are created
/// automatically, one per indicator, wired to the indicator and to the
/// owner's host vertex.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    name: String,
    class: GraphClass,
    clusters: Vec<(String, Vec<String>)>,
    variables: Vec<String>,
    indicators: Vec<IndicatorDecl>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn new(name: impl Into<String>, class: GraphClass) -> Self {
        GraphBuilder {
            name: name.into(),
            class,
            clusters: Vec::new(),
            variables: Vec::new(),
            indicators: Vec::new(),
            directed: Vec::new(),
            bidirected: Vec::new(),
        }
    }

    pub fn cluster<I, V>(mut self, id: impl Into<String>, members: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        self.add_cluster(id, members);
        self
    }

    pub fn add_cluster<I, V>(&mut self, id: impl Into<String>, members: I)
    where
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        self.clusters
            .push((id.into(), members.into_iter().map(Into::into).collect()));
    }

    pub fn var(mut self, id: impl Into<String>) -> Self {
        self.add_var(id);
        self
    }

    pub fn add_var(&mut self, id: impl Into<String>) {
        self.variables.push(id.into());
    }

    /// Indicator named `R_<owner>`.
    pub fn indicator(self, owner: impl Into<String>) -> Self {
        let owner = owner.into();
        let id = format!("R_{owner}");
        self.named_indicator(id, owner)
    }

    pub fn named_indicator(mut self, id: impl Into<String>, owner: impl Into<String>) -> Self {
        self.add_indicator(id, owner, None);
        self
    }

    pub fn add_indicator(&mut self, id: impl Into<String>, owner: impl Into<String>, proxy: Option<String>) {
        self.indicators.push(IndicatorDecl {
            id: id.into(),
            owner: owner.into(),
            proxy,
        });
    }

    pub fn edge(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.add_edge(a, b);
        self
    }

    pub fn add_edge(&mut self, a: impl Into<String>, b: impl Into<String>) {
        self.directed.push((a.into(), b.into()));
    }

    pub fn biedge(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.add_biedge(a, b);
        self
    }

    pub fn add_biedge(&mut self, a: impl Into<String>, b: impl Into<String>) {
        self.bidirected.push((a.into(), b.into()));
    }

    /// Builds and validates against the declared class.
    pub fn build(self) -> Result<MixedGraph> {
        let g = self.build_unchecked()?;
        let violations = validate(&g);
        if violations.is_empty() {
            Ok(g)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Builds without class validation. Fails only on structural problems:
    /// duplicate ids, references to undeclared vertices, or invalid
    /// clusters.
    pub fn build_unchecked(self) -> Result<MixedGraph> {
        let mut cluster_problems = Vec::new();
        let mut owner_of: BTreeMap<&str, &str> = BTreeMap::new();
        for (c, members) in &self.clusters {
            if members.is_empty() {
                cluster_problems.push(Violation::new("cluster must be nonempty", [c.as_str()]));
            }
            for m in members {
                if let Some(prev) = owner_of.insert(m, c) {
                    if prev != c {
                        cluster_problems.push(Violation::new(
                            "clusters must be disjoint",
                            [m.as_str(), prev, c.as_str()],
                        ));
                    }
                }
            }
        }
        if !cluster_problems.is_empty() {
            return Err(Error::Validation(cluster_problems));
        }
        let clustering = Clustering::new(self.clusters.clone())?;
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut ids: BTreeSet<String> = BTreeSet::new();
        let mut push = |v: Vertex, vertices: &mut Vec<Vertex>| -> Result<()> {
            if !ids.insert(v.id.clone()) {
                return Err(Error::Validation(vec![Violation::new(
                    "duplicate vertex id",
                    [v.id.clone()],
                )]));
            }
            vertices.push(v);
            Ok(())
        };
        for (c, _) in &self.clusters {
            push(
                Vertex {
                    id: c.clone(),
                    kind: Kind::Cluster,
                    owner: None,
                },
                &mut vertices,
            )?;
        }
        for v in &self.variables {
            push(
                Vertex {
                    id: v.clone(),
                    kind: Kind::Variable,
                    owner: None,
                },
                &mut vertices,
            )?;
        }
        for r in &self.indicators {
            push(
                Vertex {
                    id: r.id.clone(),
                    kind: Kind::Indicator,
                    owner: Some(r.owner.clone()),
                },
                &mut vertices,
            )?;
        }
        for r in &self.indicators {
            let id = r.proxy.clone().unwrap_or_else(|| format!("{}*", r.owner));
            push(
                Vertex {
                    id,
                    kind: Kind::Proxy,
                    owner: Some(r.owner.clone()),
                },
                &mut vertices,
            )?;
        }
        let index: BTreeMap<String, usize> = vertices.iter().enumerate().map(|(i, v)| (v.id.clone(), i)).collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(id.to_string()))
        };
        let mut directed = BTreeSet::new();
        let mut bidirected = BTreeSet::new();
        for (a, b) in &self.directed {
            directed.insert((lookup(a)?, lookup(b)?));
        }
        for (a, b) in &self.bidirected {
            let (x, y) = (lookup(a)?, lookup(b)?);
            bidirected.insert((x.min(y), x.max(y)));
        }
        // Definitional proxy edges.
        let n_ind = self.indicators.len();
        let first_proxy = vertices.len() - n_ind;
        let first_ind = first_proxy - n_ind;
        for (k, r) in self.indicators.iter().enumerate() {
            let proxy = first_proxy + k;
            let ind = first_ind + k;
            directed.insert((ind, proxy));
            let host = index
                .get(&r.owner)
                .copied()
                .or_else(|| clustering.cluster_of(&r.owner).and_then(|c| index.get(c).copied()));
            if let Some(h) = host {
                directed.insert((h, proxy));
            }
        }
        Ok(MixedGraph::assemble(
            self.name, self.class, vertices, directed, bidirected, clustering,
        ))
    }
}

/// Reinterprets an m-ADMG (or ADMG) under the trivial clustering: each
/// variable becomes a singleton cluster of the same name.
pub fn promote_trivial(g: &MixedGraph) -> Result<MixedGraph> {
    let class = match g.class() {
        GraphClass::Admg => GraphClass::CDmg,
        GraphClass::MAdmg => GraphClass::MCDmg,
        other => {
            return Err(Error::WrongGraphClass {
                expected: "admg or m-admg".into(),
                found: other.to_string(),
            })
        }
    };
    let mut b = GraphBuilder::new(g.name(), class);
    for v in g.vertices() {
        match v.kind {
            Kind::Variable => b.add_cluster(v.id.clone(), [v.id.clone()]),
            Kind::Cluster => {
                return Err(Error::WrongGraphClass {
                    expected: "variable-level graph".into(),
                    found: "graph with cluster vertices".into(),
                })
            }
            _ => {}
        }
    }
    for r in g.indicators() {
        let owner = g.owner(r).unwrap_or_default().to_string();
        let proxy = g.proxy_of(&owner).map(|p| g.id(p).to_string());
        b.add_indicator(g.id(r), owner, proxy);
    }
    for (a, c) in g.directed_edges() {
        let ka = g.vertex(&a).map(|v| v.kind);
        let kc = g.vertex(&c).map(|v| v.kind);
        if ka == Some(Kind::Proxy) || kc == Some(Kind::Proxy) {
            continue;
        }
        b.add_edge(a, c);
    }
    for (a, c) in g.bidirected_edges() {
        b.add_biedge(a, c);
    }
    b.build()
}
