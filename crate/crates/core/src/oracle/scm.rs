//! Discrete structural causal models over variable-level graphs, with
//! exact joint tables.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphClass, Kind, MixedGraph};
use crate::par::{self, Parallelism};

/// Joint states (latents included) above which exact tables are refused.
pub const MAX_STATES: u128 = 1 << 20;
/// Cardinality of the latent variable behind each bidirected edge.
pub const LATENT_CARD: usize = 4;
/// Smallest probability a random conditional table may contain.
pub const CPT_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct DiscreteScm {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    cards: Vec<usize>,
    kinds: Vec<Kind>,
    parents: Vec<Vec<usize>>,
    latent_parents: Vec<Vec<usize>>,
    latent_probs: Vec<Vec<f64>>,
    /// Row-major: one row of `cards[i]` probabilities per configuration of
    /// the observed parents (leading) and latent parents.
    cpt: Vec<Vec<f64>>,
    strides: Vec<usize>,
    /// `(proxy, variable, indicator)` names.
    proxies: Vec<(String, String, String)>,
}

/// Tabulated distribution over the endogenous nodes of a model, one
/// probability per state in mixed radix order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub names: Vec<String>,
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.cards)
    }

    pub fn value(&self, strides: &[usize], state: usize, col: usize) -> usize {
        (state / strides[col]) % self.cards[col]
    }
}

fn strides_of(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in 1..cards.len() {
        s[i] = s[i - 1] * cards[i - 1];
    }
    s
}

fn product(cards: impl IntoIterator<Item = usize>) -> u128 {
    cards.into_iter().map(|c| c as u128).product()
}

/// A probability vector with Dirichlet(1, .., 1) weights, floored.
fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    normalize_floored(&mut w);
    w
}

fn normalize_floored(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x = (*x / s).max(CPT_FLOOR);
    }
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
}

impl DiscreteScm {
    /// Model shape for a variable-level graph: `card` values per variable,
    /// binary indicators, one latent per bidirected edge. All tables start
    /// uniform.
    pub fn structure(g: &MixedGraph, card: usize) -> Result<Self> {
        if !matches!(g.class(), GraphClass::Admg | GraphClass::MAdmg) {
            return Err(Error::WrongGraphClass {
                expected: "admg or m-admg".into(),
                found: g.class().to_string(),
            });
        }
        if card < 2 {
            return Err(Error::Precondition("variables need at least two values".into()));
        }
        let nodes: Vec<usize> = g
            .indices_of_kind(Kind::Variable)
            .into_iter()
            .chain(g.indicators())
            .collect();
        let pos: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let names: Vec<String> = nodes.iter().map(|&v| g.id(v).to_string()).collect();
        let kinds: Vec<Kind> = nodes.iter().map(|&v| g.kind(v)).collect();
        let cards: Vec<usize> = kinds
            .iter()
            .map(|k| if *k == Kind::Indicator { 2 } else { card })
            .collect();
        let parents: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&v| {
                let mut ps: Vec<usize> = g.parents(v).iter().filter_map(|p| pos.get(p).copied()).collect();
                ps.sort_unstable();
                ps
            })
            .collect();
        let mut latent_parents = vec![Vec::new(); nodes.len()];
        let mut latent_probs = Vec::new();
        for (a, b) in g.bidirected_edges() {
            let l = latent_probs.len();
            let (ia, ib) = (pos[&g.index_of(&a)?], pos[&g.index_of(&b)?]);
            latent_parents[ia].push(l);
            if ib != ia {
                latent_parents[ib].push(l);
            }
            latent_probs.push(vec![1.0 / LATENT_CARD as f64; LATENT_CARD]);
        }
        let states = product(cards.iter().copied()) * (LATENT_CARD as u128).pow(latent_probs.len() as u32);
        if states > MAX_STATES {
            return Err(Error::DomainTooLarge {
                states,
                limit: MAX_STATES,
            });
        }
        let mut scm = DiscreteScm {
            index: names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect(),
            strides: strides_of(&cards),
            names,
            cards,
            kinds,
            parents,
            latent_parents,
            latent_probs,
            cpt: Vec::new(),
            proxies: Vec::new(),
        };
        scm.cpt = (0..scm.names.len())
            .map(|i| vec![1.0 / scm.cards[i] as f64; scm.rows(i) * scm.cards[i]])
            .collect();
        for r in g.indicators() {
            let owner = g.owner(r).expect("indicator owner");
            let p = g.proxy_of(owner).expect("proxy");
            scm.proxies
                .push((g.id(p).to_string(), owner.to_string(), g.id(r).to_string()));
        }
        Ok(scm)
    }

    /// Random tables drawn from `(seed, trial)`.
    pub fn random(g: &MixedGraph, card: usize, seed: u64, trial: u64) -> Result<Self> {
        let mut scm = Self::structure(g, card)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        for l in 0..scm.latent_probs.len() {
            scm.latent_probs[l] = random_simplex(&mut rng, LATENT_CARD);
        }
        for i in 0..scm.names.len() {
            let k = scm.cards[i];
            for row in 0..scm.rows(i) {
                let p = random_simplex(&mut rng, k);
                scm.cpt[i][row * k..(row + 1) * k].copy_from_slice(&p);
            }
        }
        Ok(scm)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn kind(&self, i: usize) -> Kind {
        self.kinds[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn latent_count(&self) -> usize {
        self.latent_probs.len()
    }

    pub fn proxies(&self) -> &[(String, String, String)] {
        &self.proxies
    }

    /// Number of parent configurations of node `i`.
    pub fn rows(&self, i: usize) -> usize {
        self.parents[i].iter().map(|&p| self.cards[p]).product::<usize>()
            * LATENT_CARD.pow(self.latent_parents[i].len() as u32)
    }

    pub fn cpt(&self, i: usize) -> &[f64] {
        &self.cpt[i]
    }

    /// Replaces the table of node `name`; rows must be distributions.
    pub fn set_cpt(&mut self, name: &str, table: Vec<f64>) -> Result<()> {
        let i = self.node(name).ok_or_else(|| Error::UnknownVertex(name.to_string()))?;
        let k = self.cards[i];
        if table.len() != self.rows(i) * k {
            return Err(Error::Precondition(format!(
                "table for `{name}` needs {} entries",
                self.rows(i) * k
            )));
        }
        for row in table.chunks(k) {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!("row of `{name}` is not a distribution")));
            }
        }
        self.cpt[i] = table;
        Ok(())
    }

    pub fn latent_probs(&self, l: usize) -> &[f64] {
        &self.latent_probs[l]
    }

    pub fn set_latent_probs(&mut self, l: usize, p: Vec<f64>) {
        self.latent_probs[l] = p;
    }

    /// Every free parameter as one flat vector: latent priors, then each
    /// conditional table.
    pub fn parameters(&self) -> Vec<f64> {
        self.latent_probs
            .iter()
            .chain(&self.cpt)
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    /// Inverse of [`DiscreteScm::parameters`]; lengths must match.
    pub fn with_parameters(&self, theta: &[f64]) -> DiscreteScm {
        let mut out = self.clone();
        let mut k = 0;
        for v in out.latent_probs.iter_mut().chain(out.cpt.iter_mut()) {
            let n = v.len();
            v.copy_from_slice(&theta[k..k + n]);
            k += n;
        }
        out
    }

    /// Block layout of [`DiscreteScm::parameters`]: each entry is the
    /// width of one distribution.
    pub fn parameter_blocks(&self) -> Vec<usize> {
        let mut out = vec![LATENT_CARD; self.latent_probs.len()];
        for i in 0..self.names.len() {
            out.extend(std::iter::repeat_n(self.cards[i], self.rows(i)));
        }
        out
    }

    fn row_of(&self, i: usize, state: usize, latent: &[usize]) -> usize {
        let mut row = 0;
        let mut mul = 1;
        for &p in &self.parents[i] {
            row += mul * ((state / self.strides[p]) % self.cards[p]);
            mul *= self.cards[p];
        }
        for &l in &self.latent_parents[i] {
            row += mul * latent[l];
            mul *= LATENT_CARD;
        }
        row
    }

    /// Exact distribution of the endogenous nodes after setting the nodes
    /// in `fixed` to the given values (an empty map gives the
    /// observational distribution).
    pub fn table(&self, fixed: &BTreeMap<usize, usize>, mode: Parallelism) -> JointTable {
        let n_states: usize = self.cards.iter().product();
        let nl = self.latent_probs.len();
        let n_latent = LATENT_CARD.pow(nl as u32);
        let mut probs = vec![0.0; n_states];
        par::fill(mode, &mut probs, |s| {
            if fixed.iter().any(|(&i, &x)| (s / self.strides[i]) % self.cards[i] != x) {
                return 0.0;
            }
            let mut latent = vec![0usize; nl];
            let mut total = 0.0;
            for u in 0..n_latent {
                let mut rest = u;
                let mut p = 1.0;
                for (l, slot) in latent.iter_mut().enumerate() {
                    *slot = rest % LATENT_CARD;
                    rest /= LATENT_CARD;
                    p *= self.latent_probs[l][*slot];
                }
                for i in 0..self.names.len() {
                    if fixed.contains_key(&i) {
                        continue;
                    }
                    let v = (s / self.strides[i]) % self.cards[i];
                    p *= self.cpt[i][self.row_of(i, s, &latent) * self.cards[i] + v];
                    if p == 0.0 {
                        break;
                    }
                }
                total += p;
            }
            total
        });
        JointTable {
            names: self.names.clone(),
            cards: self.cards.clone(),
            probs,
        }
    }

    pub fn observational(&self, mode: Parallelism) -> JointTable {
        self.table(&BTreeMap::new(), mode)
    }

    /// Interventional table for named assignments.
    pub fn interventional_table(&self, fixed: &BTreeMap<String, usize>, mode: Parallelism) -> Result<JointTable> {
        let mut ix = BTreeMap::new();
        for (name, &x) in fixed {
            let i = self.node(name).ok_or_else(|| Error::UnknownVertex(name.clone()))?;
            if x >= self.cards[i] {
                return Err(Error::Evaluation(format!("`{name}` has no value {x}")));
            }
            ix.insert(i, x);
        }
        Ok(self.table(&ix, mode))
    }

    /// Observed nodes in an order compatible with the directed edges.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.names.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (i, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(i);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            out.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        out
    }

    /// Draws one joint state by ancestral sampling.
    pub fn sample_state(&self, order: &[usize], rng: &mut impl Rng) -> Vec<usize> {
        let latent: Vec<usize> = self.latent_probs.iter().map(|p| draw(p, rng)).collect();
        let mut values = vec![0usize; self.names.len()];
        for &i in order {
            let mut row = 0;
            let mut mul = 1;
            for &p in &self.parents[i] {
                row += mul * values[p];
                mul *= self.cards[p];
            }
            for &l in &self.latent_parents[i] {
                row += mul * latent[l];
                mul *= LATENT_CARD;
            }
            let k = self.cards[i];
            values[i] = draw(&self.cpt[i][row * k..(row + 1) * k], rng);
        }
        values
    }
}

fn draw(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GraphBuilder;

    fn confounded() -> MixedGraph {
        GraphBuilder::new("c", GraphClass::MAdmg)
            .var("X")
            .var("Y")
            .indicator("Y")
            .edge("X", "Y")
            .biedge("X", "R_Y")
            .build()
            .unwrap()
    }

    #[test]
    fn tables_are_distributions() {
        let g = confounded();
        let scm = DiscreteScm::random(&g, 3, 7, 0).unwrap();
        let t = scm.observational(Parallelism::Sequential);
        assert_eq!(t.len(), 3 * 3 * 2);
        assert!((t.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.probs.iter().all(|&p| p > 0.0));
        let fixed: BTreeMap<String, usize> = [("X".to_string(), 1)].into();
        let d = scm.interventional_table(&fixed, Parallelism::Sequential).unwrap();
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let g = confounded();
        let a = DiscreteScm::random(&g, 2, 1, 0).unwrap().parameters();
        let b = DiscreteScm::random(&g, 2, 1, 0).unwrap().parameters();
        let c = DiscreteScm::random(&g, 2, 1, 1).unwrap().parameters();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&p| p >= CPT_FLOOR * 0.99));
    }

    #[test]
    fn modes_agree() {
        let g = confounded();
        let scm = DiscreteScm::random(&g, 2, 3, 0).unwrap();
        assert_eq!(
            scm.observational(Parallelism::Sequential),
            scm.observational(Parallelism::Parallel)
        );
    }

    #[test]
    fn refuses_huge_domains() {
        let mut b = GraphBuilder::new("big", GraphClass::Admg);
        for i in 0..21 {
            b.add_var(format!("V{i}"));
        }
        let g = b.build().unwrap();
        assert!(matches!(
            DiscreteScm::structure(&g, 2),
            Err(Error::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn sampling_matches_table() {
        let g = confounded();
        let scm = DiscreteScm::random(&g, 2, 11, 0).unwrap();
        let t = scm.observational(Parallelism::Sequential);
        let order = scm.topological_order();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut counts = vec![0usize; t.len()];
        let strides = t.strides();
        for _ in 0..n {
            let v = scm.sample_state(&order, &mut rng);
            let s: usize = v.iter().zip(&strides).map(|(a, b)| a * b).sum();
            counts[s] += 1;
        }
        for (c, p) in counts.iter().zip(&t.probs) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }
}
