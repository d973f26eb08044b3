//! Generation of the variable-level graphs compatible with an abstract
//! cluster graph.
//!
//! Every abstract edge is realized by a nonempty set of variable-level
//! pairs between the vertices its endpoints stand for; candidates that
//! create a directed cycle are dropped. With `canonical` set, only the
//! lexicographically smallest member of each orbit under within-cluster
//! renaming is produced.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cluster_indicator_name, Level};
use crate::error::{Error, Result};
use crate::graph::{Clustering, GraphBuilder, GraphClass, Kind, MixedGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_vars_per_cluster: usize,
    pub max_edges: Option<usize>,
    pub limit: Option<usize>,
    pub canonical: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_vars_per_cluster: 2,
            max_edges: None,
            limit: None,
            canonical: true,
        }
    }
}

impl Budget {
    pub fn new(max_vars_per_cluster: usize) -> Self {
        Budget {
            max_vars_per_cluster,
            ..Budget::default()
        }
    }

    pub fn max_edges(mut self, n: usize) -> Self {
        self.max_edges = Some(n);
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }

    pub fn labeled(mut self) -> Self {
        self.canonical = false;
        self
    }
}

/// Variable-level vertex: a substantive variable or the indicator of one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    Var(String),
    Ind(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    indicators: BTreeSet<String>,
    directed: BTreeSet<(Node, Node)>,
    bidirected: BTreeSet<(Node, Node)>,
}

fn bi_key(a: Node, b: Node) -> (Node, Node) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Abstract role of a variable-level vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Cluster(String),
    Indicator(String),
}

struct Spec<'a> {
    abs: &'a MixedGraph,
    level: Level,
    /// cluster id → candidate member names, in order.
    names: Vec<(String, Vec<String>)>,
    min_size: Vec<usize>,
    max_size: Vec<usize>,
    /// abstract indicator id → owner (member at m-level, cluster at cm-level).
    abs_indicators: BTreeMap<String, String>,
    directed: BTreeSet<(Role, Role)>,
    bidirected: BTreeSet<(Role, Role)>,
}

fn role_of(abs: &MixedGraph, ix: usize) -> Option<Role> {
    match abs.kind(ix) {
        Kind::Cluster => Some(Role::Cluster(abs.id(ix).to_string())),
        Kind::Indicator => Some(Role::Indicator(abs.id(ix).to_string())),
        _ => None,
    }
}

impl<'a> Spec<'a> {
    fn new(abs: &'a MixedGraph, budget: &Budget) -> Result<Self> {
        let level = Level::of(abs.class())?;
        let mut directed = BTreeSet::new();
        let mut bidirected = BTreeSet::new();
        for &(a, b) in abs.directed_ix() {
            if let (Some(ra), Some(rb)) = (role_of(abs, a), role_of(abs, b)) {
                directed.insert((ra, rb));
            }
        }
        for &(a, b) in abs.bidirected_ix() {
            if let (Some(ra), Some(rb)) = (role_of(abs, a), role_of(abs, b)) {
                bidirected.insert(if ra <= rb { (ra, rb) } else { (rb, ra) });
            }
        }
        let mut names = Vec::new();
        let mut min_size = Vec::new();
        let mut max_size = Vec::new();
        for (c, declared) in abs.clustering().iter() {
            let role = Role::Cluster(c.to_string());
            let looped =
                directed.contains(&(role.clone(), role.clone())) || bidirected.contains(&(role.clone(), role.clone()));
            let need = if looped { 2 } else { 1 };
            let (lo, hi, list) = if level == Level::MCDmg {
                let n = declared.len();
                (n, n, declared.iter().cloned().collect::<Vec<_>>())
            } else {
                let mut list: Vec<String> = declared.iter().cloned().collect();
                let mut k = 1;
                while list.len() < budget.max_vars_per_cluster {
                    let cand = format!("{c}_{k}");
                    if !list.contains(&cand) {
                        list.push(cand);
                    }
                    k += 1;
                }
                (need, budget.max_vars_per_cluster, list)
            };
            if lo < need || lo > hi || hi > budget.max_vars_per_cluster {
                return Err(Error::BudgetTooSmall(format!(
                    "cluster `{c}` needs between {} and {} variable(s), budget allows {}",
                    need.max(lo),
                    hi,
                    budget.max_vars_per_cluster
                )));
            }
            names.push((c.to_string(), list));
            min_size.push(lo);
            max_size.push(hi);
        }
        let abs_indicators = abs
            .indicators()
            .into_iter()
            .map(|r| (abs.id(r).to_string(), abs.owner(r).unwrap_or_default().to_string()))
            .collect();
        Ok(Spec {
            abs,
            level,
            names,
            min_size,
            max_size,
            abs_indicators,
            directed,
            bidirected,
        })
    }

    fn cluster_of<'m>(&self, members: &'m BTreeMap<String, String>, var: &str) -> Option<&'m String> {
        members.get(var)
    }

    /// Role of a node under the member→cluster map.
    fn node_role(&self, members: &BTreeMap<String, String>, n: &Node) -> Option<Role> {
        match n {
            Node::Var(v) => self.cluster_of(members, v).map(|c| Role::Cluster(c.clone())),
            Node::Ind(owner) => match self.level {
                Level::CDmg => None,
                Level::CmCDmg => self.cluster_of(members, owner).map(|c| {
                    let id = self
                        .abs_indicators
                        .iter()
                        .find(|(_, o)| *o == c)
                        .map(|(id, _)| id.clone())
                        .unwrap_or_else(|| cluster_indicator_name(c));
                    Role::Indicator(id)
                }),
                Level::MCDmg => self
                    .abs_indicators
                    .iter()
                    .find(|(_, o)| *o == owner)
                    .map(|(id, _)| Role::Indicator(id.clone())),
            },
        }
    }

    /// Whether `cand` projects exactly onto the abstract graph.
    fn projects_exactly(&self, members: &BTreeMap<String, String>, cand: &Candidate) -> bool {
        let mut inds = BTreeSet::new();
        for o in &cand.indicators {
            match self.node_role(members, &Node::Ind(o.clone())) {
                Some(Role::Indicator(r)) => {
                    inds.insert(r);
                }
                _ => return false,
            }
        }
        let want: BTreeSet<String> = self.abs_indicators.keys().cloned().collect();
        if inds != want {
            return false;
        }
        let mut d = BTreeSet::new();
        for (a, b) in &cand.directed {
            match (self.node_role(members, a), self.node_role(members, b)) {
                (Some(x), Some(y)) => {
                    d.insert((x, y));
                }
                _ => return false,
            }
        }
        let mut bi = BTreeSet::new();
        for (a, b) in &cand.bidirected {
            match (self.node_role(members, a), self.node_role(members, b)) {
                (Some(x), Some(y)) => {
                    bi.insert(if x <= y { (x, y) } else { (y, x) });
                }
                _ => return false,
            }
        }
        d == self.directed && bi == self.bidirected
    }

    fn build(&self, clusters: &[(String, Vec<String>)], cand: &Candidate, k: usize) -> MixedGraph {
        let class = if self.level == Level::CDmg {
            GraphClass::Admg
        } else {
            GraphClass::MAdmg
        };
        let mut b = GraphBuilder::new(format!("{}-compat-{k}", self.abs.name()), class);
        for (_, ms) in clusters {
            for m in ms {
                b.add_var(m.clone());
            }
        }
        let ind_name = |owner: &str| -> String {
            if self.level == Level::MCDmg {
                self.abs_indicators
                    .iter()
                    .find(|(_, o)| *o == owner)
                    .map(|(id, _)| id.clone())
                    .unwrap_or_else(|| format!("R_{owner}"))
            } else {
                format!("R_{owner}")
            }
        };
        for o in &cand.indicators {
            b.add_indicator(ind_name(o), o.clone(), None);
        }
        let name = |n: &Node| match n {
            Node::Var(v) => v.clone(),
            Node::Ind(o) => ind_name(o),
        };
        for (x, y) in &cand.directed {
            b.add_edge(name(x), name(y));
        }
        for (x, y) in &cand.bidirected {
            b.add_biedge(name(x), name(y));
        }
        b.build().expect("enumerated graph is a valid m-ADMG")
    }
}

/// One realization slot: an abstract edge and its candidate pairs.
struct Slot {
    directed: bool,
    pairs: Vec<(Node, Node)>,
}

fn expand(
    spec: &Spec<'_>,
    role: &Role,
    clusters: &BTreeMap<String, Vec<String>>,
    indicators: &BTreeSet<String>,
) -> Vec<Node> {
    match role {
        Role::Cluster(c) => clusters[c].iter().cloned().map(Node::Var).collect(),
        Role::Indicator(r) => match spec.level {
            Level::CDmg => Vec::new(),
            Level::MCDmg => vec![Node::Ind(spec.abs_indicators[r].clone())],
            Level::CmCDmg => {
                let c = &spec.abs_indicators[r];
                clusters[c]
                    .iter()
                    .filter(|m| indicators.contains(*m))
                    .cloned()
                    .map(Node::Ind)
                    .collect()
            }
        },
    }
}

fn slots(
    spec: &Spec<'_>,
    clusters: &BTreeMap<String, Vec<String>>,
    indicators: &BTreeSet<String>,
) -> Option<Vec<Slot>> {
    let mut out = Vec::new();
    // Self-loops first: they are the most constrained by acyclicity.
    let mut directed: Vec<&(Role, Role)> = spec.directed.iter().collect();
    directed.sort_by_key(|(a, b)| a != b);
    for (a, b) in directed {
        let (ea, eb) = (
            expand(spec, a, clusters, indicators),
            expand(spec, b, clusters, indicators),
        );
        let pairs: Vec<(Node, Node)> = ea
            .iter()
            .flat_map(|x| eb.iter().map(move |y| (x.clone(), y.clone())))
            .filter(|(x, y)| x != y)
            .collect();
        if pairs.is_empty() {
            return None;
        }
        out.push(Slot { directed: true, pairs });
    }
    for (a, b) in &spec.bidirected {
        let (ea, eb) = (
            expand(spec, a, clusters, indicators),
            expand(spec, b, clusters, indicators),
        );
        let mut pairs: BTreeSet<(Node, Node)> = BTreeSet::new();
        for x in &ea {
            for y in &eb {
                if x != y {
                    pairs.insert(bi_key(x.clone(), y.clone()));
                }
            }
        }
        if pairs.is_empty() {
            return None;
        }
        out.push(Slot {
            directed: false,
            pairs: pairs.into_iter().collect(),
        });
    }
    Some(out)
}

fn has_cycle(edges: &BTreeSet<(Node, Node)>) -> bool {
    let mut adj: BTreeMap<&Node, Vec<&Node>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&Node, u8> = BTreeMap::new();
    fn visit<'n>(v: &'n Node, adj: &BTreeMap<&'n Node, Vec<&'n Node>>, state: &mut BTreeMap<&'n Node, u8>) -> bool {
        state.insert(v, 1);
        for &u in adj.get(v).map(Vec::as_slice).unwrap_or(&[]) {
            match state.get(u).copied().unwrap_or(0) {
                1 => return true,
                0 if visit(u, adj, state) => return true,
                _ => {}
            }
        }
        state.insert(v, 2);
        false
    }
    let keys: Vec<&Node> = adj.keys().copied().collect();
    for v in keys {
        if state.get(v).copied().unwrap_or(0) == 0 && visit(v, &adj, &mut state) {
            return true;
        }
    }
    false
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

fn rename(cand: &Candidate, map: &BTreeMap<String, String>) -> Candidate {
    let r = |s: &String| map.get(s).cloned().unwrap_or_else(|| s.clone());
    let rn = |n: &Node| match n {
        Node::Var(v) => Node::Var(r(v)),
        Node::Ind(o) => Node::Ind(r(o)),
    };
    Candidate {
        indicators: cand.indicators.iter().map(r).collect(),
        directed: cand.directed.iter().map(|(a, b)| (rn(a), rn(b))).collect(),
        bidirected: cand.bidirected.iter().map(|(a, b)| bi_key(rn(a), rn(b))).collect(),
    }
}

/// Within-cluster renamings, as member→member maps (identity excluded).
fn renamings(clusters: &[(String, Vec<String>)]) -> Vec<BTreeMap<String, String>> {
    let mut maps: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (_, ms) in clusters {
        let perms = permutations(ms);
        let mut next = Vec::new();
        for m in &maps {
            for p in &perms {
                let mut m = m.clone();
                for (a, b) in ms.iter().zip(p) {
                    m.insert(a.clone(), b.clone());
                }
                next.push(m);
            }
        }
        maps = next;
    }
    maps.retain(|m| m.iter().any(|(a, b)| a != b));
    maps
}

fn canonical_form(
    spec: &Spec<'_>,
    members: &BTreeMap<String, String>,
    renames: &[BTreeMap<String, String>],
    cand: &Candidate,
) -> Candidate {
    let mut best = cand.clone();
    for m in renames {
        let img = rename(cand, m);
        if img < best && spec.projects_exactly(members, &img) {
            best = img;
        }
    }
    best
}

struct Assignment {
    clusters: Vec<(String, Vec<String>)>,
    by_cluster: BTreeMap<String, Vec<String>>,
    members: BTreeMap<String, String>,
    indicators: BTreeSet<String>,
}

/// Cluster sizes × indicator placements, in deterministic order.
fn assignments(spec: &Spec<'_>) -> Vec<Assignment> {
    let mut sizes: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..spec.names.len() {
        let mut next = Vec::new();
        for s in &sizes {
            for k in spec.min_size[i]..=spec.max_size[i] {
                let mut s = s.clone();
                s.push(k);
                next.push(s);
            }
        }
        sizes = next;
    }
    sizes.sort_by_key(|s| (s.iter().sum::<usize>(), s.clone()));
    let mut out = Vec::new();
    for s in sizes {
        let clusters: Vec<(String, Vec<String>)> = spec
            .names
            .iter()
            .zip(&s)
            .map(|((c, names), &k)| (c.clone(), names[..k].to_vec()))
            .collect();
        let by_cluster: BTreeMap<String, Vec<String>> = clusters.iter().cloned().collect();
        let members: BTreeMap<String, String> = clusters
            .iter()
            .flat_map(|(c, ms)| ms.iter().map(move |m| (m.clone(), c.clone())))
            .collect();
        let mut ind_sets: Vec<BTreeSet<String>> = vec![BTreeSet::new()];
        match spec.level {
            Level::CDmg => {}
            Level::MCDmg => {
                ind_sets = vec![spec.abs_indicators.values().cloned().collect()];
            }
            Level::CmCDmg => {
                for c in spec.abs_indicators.values() {
                    let ms = &by_cluster[c];
                    let mut next = Vec::new();
                    for base in &ind_sets {
                        for mask in 1u32..(1 << ms.len()) {
                            let mut set = base.clone();
                            for (j, m) in ms.iter().enumerate() {
                                if mask & (1 << j) != 0 {
                                    set.insert(m.clone());
                                }
                            }
                            next.push(set);
                        }
                    }
                    ind_sets = next;
                }
            }
        }
        for indicators in ind_sets {
            out.push(Assignment {
                clusters: clusters.clone(),
                by_cluster: by_cluster.clone(),
                members: members.clone(),
                indicators,
            });
        }
    }
    out
}

/// Calls `visit` on every compatible graph within `budget` in a
/// deterministic order; returns how many were visited. Fails with
/// `BudgetTooSmall` when none exists.
pub fn for_each_compatible<F>(abs: &MixedGraph, budget: &Budget, mut visit: F) -> Result<usize>
where
    F: FnMut(&MixedGraph) -> ControlFlow<()>,
{
    let spec = Spec::new(abs, budget)?;
    let mut count = 0usize;
    for a in assignments(&spec) {
        let Some(slots) = slots(&spec, &a.by_cluster, &a.indicators) else {
            continue;
        };
        let renames = if budget.canonical {
            renamings(&a.clusters)
        } else {
            Vec::new()
        };
        let mut cand = Candidate {
            indicators: a.indicators.clone(),
            directed: BTreeSet::new(),
            bidirected: BTreeSet::new(),
        };
        let mut ctx = Ctx {
            spec: &spec,
            assignment: &a,
            renames: &renames,
            budget,
            count: &mut count,
            visit: &mut visit,
        };
        if ctx.recurse(&slots, 0, &mut cand, 0).is_break() {
            break;
        }
    }
    if count == 0 {
        return Err(Error::BudgetTooSmall(format!(
            "`{}` has no compatible graph with at most {} variable(s) per cluster{}",
            abs.name(),
            budget.max_vars_per_cluster,
            budget
                .max_edges
                .map(|e| format!(" and {e} edge(s)"))
                .unwrap_or_default()
        )));
    }
    Ok(count)
}

struct Ctx<'c, 's, F> {
    spec: &'c Spec<'s>,
    assignment: &'c Assignment,
    renames: &'c [BTreeMap<String, String>],
    budget: &'c Budget,
    count: &'c mut usize,
    visit: &'c mut F,
}

impl<F> Ctx<'_, '_, F>
where
    F: FnMut(&MixedGraph) -> ControlFlow<()>,
{
    fn recurse(&mut self, slots: &[Slot], i: usize, cand: &mut Candidate, edges: usize) -> ControlFlow<()> {
        if i == slots.len() {
            if !self.renames.is_empty()
                && canonical_form(self.spec, &self.assignment.members, self.renames, cand) != *cand
            {
                return ControlFlow::Continue(());
            }
            let g = self.spec.build(&self.assignment.clusters, cand, *self.count);
            *self.count += 1;
            (self.visit)(&g)?;
            if self.budget.limit.is_some_and(|l| *self.count >= l) {
                return ControlFlow::Break(());
            }
            return ControlFlow::Continue(());
        }
        let slot = &slots[i];
        let remaining_min = slots.len() - i - 1;
        for mask in 1u64..(1u64 << slot.pairs.len()) {
            let k = mask.count_ones() as usize;
            if self.budget.max_edges.is_some_and(|m| edges + k + remaining_min > m) {
                continue;
            }
            let chosen: Vec<&(Node, Node)> = slot
                .pairs
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, p)| p)
                .collect();
            let target = if slot.directed {
                &mut cand.directed
            } else {
                &mut cand.bidirected
            };
            for p in &chosen {
                target.insert((*p).clone());
            }
            let ok = !slot.directed || !has_cycle(&cand.directed);
            let flow = if ok {
                self.recurse(slots, i + 1, cand, edges + k)
            } else {
                ControlFlow::Continue(())
            };
            let target = if slot.directed {
                &mut cand.directed
            } else {
                &mut cand.bidirected
            };
            for p in &chosen {
                target.remove(*p);
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Recovers the clustering of a graph produced by the enumerators of this
/// module: declared members keep their cluster, generated names are
/// `<cluster>_<k>`.
pub fn infer_clustering(abs: &MixedGraph, g: &MixedGraph) -> Result<Clustering> {
    let mut map: BTreeMap<String, Vec<String>> = abs
        .clustering()
        .cluster_ids()
        .map(|c| (c.to_string(), Vec::new()))
        .collect();
    for v in g.vertices().iter().filter(|v| v.kind == Kind::Variable) {
        let declared = abs.clustering().cluster_of(&v.id).map(str::to_string);
        let generated = || {
            map.keys()
                .find(|c| {
                    v.id.strip_prefix(c.as_str())
                        .and_then(|r| r.strip_prefix('_'))
                        .is_some_and(|k| k.parse::<usize>().is_ok())
                })
                .cloned()
        };
        let c = declared
            .or_else(generated)
            .ok_or_else(|| Error::InvalidClustering(format!("variable `{}` matches no cluster", v.id)))?;
        map.get_mut(&c).expect("known cluster").push(v.id.clone());
    }
    map.retain(|_, ms| !ms.is_empty());
    Clustering::new(map)
}

pub fn enumerate_compatible(abs: &MixedGraph, budget: &Budget) -> Result<Vec<MixedGraph>> {
    let mut out = Vec::new();
    for_each_compatible(abs, budget, |g| {
        out.push(g.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

pub fn count_compatible(abs: &MixedGraph, budget: &Budget) -> Result<usize> {
    for_each_compatible(abs, budget, |_| ControlFlow::Continue(()))
}

/// Draws up to `n` distinct compatible graphs (distinct up to
/// within-cluster renaming when `budget.canonical`), deterministically from
/// `seed`. Each realization slot keeps every candidate pair with
/// probability one half, redrawn until nonempty.
pub fn sample_compatible(abs: &MixedGraph, budget: &Budget, n: usize, seed: u64) -> Result<Vec<MixedGraph>> {
    let spec = Spec::new(abs, budget)?;
    let all = assignments(&spec);
    let usable: Vec<(&Assignment, Vec<Slot>)> = all
        .iter()
        .filter_map(|a| slots(&spec, &a.by_cluster, &a.indicators).map(|s| (a, s)))
        .collect();
    if usable.is_empty() {
        return Err(Error::BudgetTooSmall(format!(
            "`{}` has no realizable placement",
            abs.name()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<(usize, Candidate)> = BTreeSet::new();
    let mut out = Vec::new();
    let max_tries = 2000 * n.max(1);
    for _ in 0..max_tries {
        if out.len() >= n {
            break;
        }
        let ai = rng.gen_range(0..usable.len());
        let (a, slots) = &usable[ai];
        let mut cand = Candidate {
            indicators: a.indicators.clone(),
            directed: BTreeSet::new(),
            bidirected: BTreeSet::new(),
        };
        for slot in slots {
            let chosen: Vec<&(Node, Node)> = loop {
                let c: Vec<&(Node, Node)> = slot.pairs.iter().filter(|_| rng.gen_bool(0.5)).collect();
                if !c.is_empty() {
                    break c;
                }
            };
            let target = if slot.directed {
                &mut cand.directed
            } else {
                &mut cand.bidirected
            };
            target.extend(chosen.into_iter().cloned());
        }
        if has_cycle(&cand.directed) {
            continue;
        }
        if budget
            .max_edges
            .is_some_and(|m| cand.directed.len() + cand.bidirected.len() > m)
        {
            continue;
        }
        let key = if budget.canonical {
            canonical_form(&spec, &a.members, &renamings(&a.clusters), &cand)
        } else {
            cand.clone()
        };
        if seen.insert((ai, key)) {
            out.push(spec.build(&a.clusters, &cand, out.len()));
        }
    }
    if out.is_empty() {
        return Err(Error::BudgetTooSmall(format!(
            "no acyclic realization of `{}` found within budget",
            abs.name()
        )));
    }
    Ok(out)
}
