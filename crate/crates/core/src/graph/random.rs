//! Seeded random graphs for property tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphBuilder, GraphClass, MixedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub vertices: usize,
    /// Probability of each directed edge.
    pub directed: f64,
    /// Probability of each bidirected edge.
    pub bidirected: f64,
    /// Allow directed cycles and self-loops. The result is then a
    /// cluster-level graph with singleton clusters.
    pub cyclic: bool,
    /// Probability that a vertex gets an indicator.
    pub indicators: f64,
}

impl RandomSpec {
    pub fn new(vertices: usize) -> Self {
        RandomSpec {
            vertices,
            directed: 0.35,
            bidirected: 0.2,
            cyclic: false,
            indicators: 0.0,
        }
    }
}

/// Draws a graph. Acyclic graphs are (m-)ADMGs over `V0, V1, ..` with
/// directed edges following index order. Cyclic ones are (m-)C-DMGs with
/// cluster `Vi = {vi}`. Indicators get incoming directed and bidirected
/// edges from substantive vertices only, never from other indicators.
pub fn random_graph(spec: &RandomSpec, seed: u64) -> MixedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.vertices;
    let ids: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let member = |i: usize| {
        if spec.cyclic {
            format!("v{i}")
        } else {
            ids[i].clone()
        }
    };
    let with_r: Vec<bool> = (0..n).map(|_| rng.gen_bool(spec.indicators)).collect();
    let has_r = with_r.iter().any(|&b| b);
    let class = match (spec.cyclic, has_r) {
        (false, false) => GraphClass::Admg,
        (false, true) => GraphClass::MAdmg,
        (true, false) => GraphClass::CDmg,
        (true, true) => GraphClass::MCDmg,
    };
    let mut b = GraphBuilder::new(format!("random-{seed}"), class);
    for (i, id) in ids.iter().enumerate() {
        if spec.cyclic {
            b.add_cluster(id, [member(i)]);
        } else {
            b.add_var(id);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let allowed = if spec.cyclic { true } else { i < j };
            if allowed && rng.gen_bool(spec.directed) {
                b.add_edge(&ids[i], &ids[j]);
            }
            if i < j && rng.gen_bool(spec.bidirected) {
                b.add_biedge(&ids[i], &ids[j]);
            }
        }
    }
    for (k, _) in with_r.iter().enumerate().filter(|(_, &r)| r) {
        let r = format!("R_{}", member(k));
        b.add_indicator(&r, member(k), None);
        for id in &ids {
            if rng.gen_bool(spec.directed) {
                b.add_edge(id, &r);
            }
            if rng.gen_bool(spec.bidirected) {
                b.add_biedge(id, &r);
            }
        }
    }
    b.build().expect("generated graphs satisfy their class")
}
