use std::collections::BTreeSet;

use mcdmg_core::abstraction::{
    count_compatible, enumerate_compatible, infer_clustering, is_compatible, pi, project, sample_compatible, Budget,
    Level,
};
use mcdmg_core::{fixtures, parse_graph, Clustering, GraphBuilder, GraphClass, MixedGraph};

fn one_edge() -> MixedGraph {
    GraphBuilder::new("ab", GraphClass::CDmg)
        .cluster("A", ["a"])
        .cluster("B", ["b"])
        .edge("A", "B")
        .build()
        .unwrap()
}

/// Directed edge lists over `na + nb` vertices (A-members first) that
/// project onto `A -> B` with nothing else: no within-cluster edges, no
/// bidirected edges, no `B -> A`, at least one `A -> B`.
fn brute_force(na: usize, nb: usize) -> Vec<BTreeSet<(usize, usize)>> {
    let n = na + nb;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let in_a = |v: usize| v < na;
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: BTreeSet<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let ok = !edges.is_empty() && edges.iter().all(|&(i, j)| in_a(i) && !in_a(j));
        if ok {
            out.push(edges);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn orbits(na: usize, nb: usize) -> usize {
    let mut seen: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    for g in brute_force(na, nb) {
        let mut best: Option<Vec<(usize, usize)>> = None;
        for pa in permutations(na) {
            for pb in permutations(nb) {
                let map = |v: usize| if v < na { pa[v] } else { na + pb[v - na] };
                let mut img: Vec<(usize, usize)> = g.iter().map(|&(i, j)| (map(i), map(j))).collect();
                img.sort();
                if best.as_ref().is_none_or(|b| img < *b) {
                    best = Some(img);
                }
            }
        }
        seen.insert(best.unwrap());
    }
    seen.len()
}

#[test]
fn labeled_and_canonical_counts_match_brute_force() {
    let mut labeled = 0;
    let mut canonical = 0;
    for na in 1..=2 {
        for nb in 1..=2 {
            labeled += brute_force(na, nb).len();
            canonical += orbits(na, nb);
        }
    }
    assert_eq!((labeled, canonical), (22, 11));
    let abs = one_edge();
    assert_eq!(count_compatible(&abs, &Budget::new(2).labeled()).unwrap(), labeled);
    assert_eq!(count_compatible(&abs, &Budget::new(2)).unwrap(), canonical);
}

#[test]
fn every_enumerated_graph_is_compatible() {
    for src in [fixtures::FIG1C, fixtures::FIG2A, fixtures::FIG2B, fixtures::FIG3] {
        let abs = parse_graph(src).unwrap();
        let level = Level::of(abs.class()).unwrap();
        let gs = enumerate_compatible(&abs, &Budget::new(2).limit(25)).unwrap();
        assert!(!gs.is_empty(), "{}", abs.name());
        let distinct: BTreeSet<String> = gs.iter().map(mcdmg_core::graph::emit::emit_graph).collect();
        assert_eq!(distinct.len(), gs.len());
        for g in &gs {
            let c = infer_clustering(&abs, g).unwrap();
            assert_eq!(project(g, &c, level).unwrap(), abs);
            assert!(is_compatible(g, &abs, &c).unwrap().compatible);
        }
    }
}

#[test]
fn incompatible_graph_names_the_offending_edge() {
    let abs = one_edge();
    let g = GraphBuilder::new("ba", GraphClass::Admg)
        .var("a")
        .var("b")
        .edge("b", "a")
        .build()
        .unwrap();
    let c = Clustering::new([("A", vec!["a"]), ("B", vec!["b"])]).unwrap();
    let r = is_compatible(&g, &abs, &c).unwrap();
    assert!(!r.compatible);
    assert!(!r.missing_realizations.is_empty());
    assert!(!r.forbidden_edges.is_empty());
}

#[test]
fn merging_indicators_enlarges_the_compatible_set() {
    let g = GraphBuilder::new("strict", GraphClass::MCDmg)
        .cluster("L", ["L"])
        .cluster("CX", ["X1", "X2"])
        .indicator("X1")
        .indicator("X2")
        .edge("L", "R_X2")
        .build()
        .unwrap();
    let merged = pi(&g).unwrap();
    let budget = Budget::new(2);
    for m in enumerate_compatible(&g, &budget).unwrap() {
        let c = infer_clustering(&g, &m).unwrap();
        assert!(is_compatible(&m, &merged, &c).unwrap().compatible);
    }
    let other = GraphBuilder::new("other", GraphClass::MAdmg)
        .var("L")
        .var("X1")
        .var("X2")
        .indicator("X1")
        .indicator("X2")
        .edge("L", "R_X1")
        .build()
        .unwrap();
    let c = Clustering::new([("L", vec!["L"]), ("CX", vec!["X1", "X2"])]).unwrap();
    assert!(is_compatible(&other, &merged, &c).unwrap().compatible);
    assert!(!is_compatible(&other, &g, &c).unwrap().compatible);
}

#[test]
fn pi_is_idempotent_and_commutes_with_projection() {
    let a = parse_graph(fixtures::FIG2A).unwrap();
    let b = pi(&a).unwrap();
    assert_eq!(pi(&b).unwrap(), b);
    for m in sample_compatible(&a, &Budget::new(2), 8, 3).unwrap() {
        let c = infer_clustering(&a, &m).unwrap();
        let up = project(&m, &c, Level::MCDmg).unwrap();
        assert_eq!(pi(&up).unwrap(), project(&m, &c, Level::CmCDmg).unwrap());
    }
}
