use std::collections::BTreeSet;

use mcdmg_core::graph::random::{random_graph, RandomSpec};
use mcdmg_core::separation::paths::d_separated_by_paths_ix;
use mcdmg_core::separation::{d_separated_ix, d_separation, mutilate, primary_path, MutilationSpec, Walk, WalkEdge};
use mcdmg_core::{fixtures, parse_graph, MixedGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three disjoint sets with nonempty `x` and `y`, drawn from a role per
/// vertex.
fn split(n: usize, roles: &[u8]) -> Option<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)> {
    let mut s = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    for (v, r) in roles.iter().enumerate().take(n) {
        match r % 4 {
            0 => s.0.insert(v),
            1 => s.1.insert(v),
            2 => s.2.insert(v),
            _ => false,
        };
    }
    (!s.0.is_empty() && !s.1.is_empty()).then_some(s)
}

fn random_walk(g: &MixedGraph, len: usize, rng: &mut ChaCha8Rng) -> Walk {
    let mut v = rng.gen_range(0..g.len());
    let mut w = Walk::single(g.id(v));
    for _ in 0..len {
        let mut opts = Vec::new();
        for u in 0..g.len() {
            for e in [WalkEdge::FORWARD, WalkEdge::BACKWARD, WalkEdge::BIDIRECTED] {
                if e.exists(g, v, u) {
                    opts.push((e, u));
                }
            }
        }
        if opts.is_empty() {
            break;
        }
        let (e, u) = opts[rng.gen_range(0..opts.len())];
        w.push(e, g.id(u));
        v = u;
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn walk_search_matches_path_definition(
        n in 2usize..6,
        seed in any::<u64>(),
        cyclic: bool,
        roles in proptest::collection::vec(any::<u8>(), 12),
    ) {
        let mut spec = RandomSpec::new(n);
        spec.cyclic = cyclic;
        spec.indicators = 0.3;
        let g = random_graph(&spec, seed);
        if let Some((x, y, z)) = split(g.len(), &roles) {
            prop_assert_eq!(d_separated_ix(&g, &x, &y, &z), d_separated_by_paths_ix(&g, &x, &y, &z));
            prop_assert_eq!(d_separated_ix(&g, &x, &y, &z), d_separated_ix(&g, &y, &x, &z));
        }
    }

    #[test]
    fn primary_paths_are_paths(n in 2usize..7, seed in any::<u64>(), len in 0usize..12) {
        let mut spec = RandomSpec::new(n);
        spec.cyclic = true;
        spec.directed = 0.5;
        let g = random_graph(&spec, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_walk(&g, len, &mut rng);
        let p = primary_path(&w).unwrap();
        prop_assert!(p.is_path());
        prop_assert!(p.is_valid_in(&g));
        prop_assert_eq!(p.vertices.first(), w.vertices.first());
        prop_assert_eq!(p.vertices.last(), w.vertices.last());
        prop_assert_eq!(primary_path(&p).unwrap(), p.clone());
        if w.all_interior_colliders() {
            prop_assert!(p.all_interior_colliders());
        }
    }
}

#[test]
fn witness_path_is_active_and_valid() {
    let g = parse_graph(fixtures::FIG2B).unwrap();
    assert!(d_separation(&g, ["CY"], ["R_CY"], ["CX"]).unwrap().separated);
    let s = d_separation(&g, ["CY"], ["R_CY"], ["CZ"]).unwrap();
    assert!(!s.separated);
    let w = s.witness_path.unwrap();
    assert!(w.is_path() && w.is_valid_in(&g));
    assert_eq!(w.vertices.first().map(String::as_str), Some("CY"));
}

#[test]
fn mutilation_never_touches_proxies() {
    let g = parse_graph(fixtures::FIG2B).unwrap();
    let m = mutilate(&g, &MutilationSpec::overline(["CX", "CY", "CZ"]).and_underline(["CX"])).unwrap();
    for p in g.proxies() {
        assert_eq!(g.parents(p).len(), m.parents(m.index_of(g.id(p)).unwrap()).len());
    }
}
