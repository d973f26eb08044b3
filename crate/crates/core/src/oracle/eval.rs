//! Numerical evaluation of cluster-level expressions against a
//! variable-level model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use super::scm::{DiscreteScm, JointTable};
use crate::docalc::expr::{Atom, ProbExpr, Term};
use crate::error::{Error, Result};
use crate::graph::{Clustering, GraphClass, Kind, MixedGraph};
use crate::par::Parallelism;

/// Value of one member inside a symbol valuation when its proxy reads
/// "missing".
pub const NA: usize = usize::MAX;

/// Values of a cluster symbol, one entry per member in member order.
pub type Valuation = Vec<usize>;
pub type Assignment = BTreeMap<Atom, Valuation>;

/// Which quantities an evaluator may consult.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// The full model: interventions and unobserved values allowed.
    Scm,
    /// Only the distribution of what is recorded: proxies, indicators and
    /// fully observed variables, no interventions.
    Manifest,
}

#[derive(Clone, Debug)]
enum Feature {
    Value(usize),
    Proxy { var: usize, ind: usize },
    AllZero(Vec<usize>),
    AnyOne(Vec<usize>),
}

type Marginal = HashMap<Vec<usize>, f64>;
/// Intervened `(vertex, value)` pairs.
type Fixed = Vec<(usize, usize)>;
type MarginalCache = HashMap<(Vec<Atom>, Fixed), Arc<Marginal>>;

pub struct Evaluator<'a> {
    g: &'a MixedGraph,
    scm: &'a DiscreteScm,
    clustering: Clustering,
    source: Source,
    mode: Parallelism,
    /// Indicator of each model variable that has one.
    indicator_of: BTreeMap<usize, usize>,
    tables: Arc<Mutex<HashMap<Fixed, Arc<JointTable>>>>,
    marginals: Mutex<MarginalCache>,
}

impl<'a> Evaluator<'a> {
    /// `g` is the graph the expressions are written over; `clustering`
    /// places the model's variables into its clusters.
    pub fn new(
        g: &'a MixedGraph,
        scm: &'a DiscreteScm,
        clustering: Clustering,
        source: Source,
        mode: Parallelism,
    ) -> Result<Self> {
        for c in g.indices_of_kind(Kind::Cluster).into_iter().map(|c| g.id(c)) {
            let ms = clustering
                .members(c)
                .ok_or_else(|| Error::InvalidClustering(format!("model has no members for `{c}`")))?;
            for m in ms {
                if scm.node(m).is_none() {
                    return Err(Error::UnknownVertex(m.clone()));
                }
            }
        }
        let mut indicator_of = BTreeMap::new();
        for (_, var, ind) in scm.proxies() {
            let v = scm.node(var).ok_or_else(|| Error::UnknownVertex(var.clone()))?;
            let r = scm.node(ind).ok_or_else(|| Error::UnknownVertex(ind.clone()))?;
            indicator_of.insert(v, r);
        }
        Ok(Evaluator {
            g,
            scm,
            clustering,
            source,
            mode,
            indicator_of,
            tables: Arc::new(Mutex::new(HashMap::new())),
            marginals: Mutex::new(HashMap::new()),
        })
    }

    /// Same graph and model read through another source. Joint tables are
    /// shared with `self`.
    pub fn with_source(&self, source: Source) -> Evaluator<'a> {
        Evaluator {
            g: self.g,
            scm: self.scm,
            clustering: self.clustering.clone(),
            source,
            mode: self.mode,
            indicator_of: self.indicator_of.clone(),
            tables: Arc::clone(&self.tables),
            marginals: Mutex::new(HashMap::new()),
        }
    }

    /// Evaluator for a variable-level graph and its own model, each
    /// variable its own cluster.
    pub fn for_variables(g: &'a MixedGraph, scm: &'a DiscreteScm, source: Source) -> Result<Self> {
        let vars: Vec<String> = g
            .indices_of_kind(Kind::Variable)
            .into_iter()
            .map(|v| g.id(v).to_string())
            .collect();
        Self::new(g, scm, Clustering::trivial(vars), source, Parallelism::Sequential)
    }

    pub fn members(&self, cluster: &str) -> Result<Vec<usize>> {
        let ms = if self.g.class().is_cluster_level() {
            self.clustering
                .members(cluster)
                .ok_or_else(|| Error::UnknownVertex(cluster.to_string()))?
                .iter()
                .cloned()
                .collect::<Vec<_>>()
        } else {
            vec![cluster.to_string()]
        };
        ms.iter()
            .map(|m| self.scm.node(m).ok_or_else(|| Error::UnknownVertex(m.clone())))
            .collect()
    }

    /// Per-member value ranges of a symbol; proxies of members with an
    /// indicator also take [`NA`].
    pub fn domain(&self, atom: &Atom) -> Result<Vec<Vec<usize>>> {
        let Atom::Value { cluster, proxy } = atom else {
            return Err(Error::Evaluation(format!("`{}` is not a symbol", atom.text())));
        };
        Ok(self
            .members(cluster)?
            .into_iter()
            .map(|m| {
                let mut vals: Vec<usize> = (0..self.scm.cards()[m]).collect();
                if *proxy && self.indicator_of.contains_key(&m) {
                    vals.push(NA);
                }
                vals
            })
            .collect())
    }

    fn features(&self, atom: &Atom) -> Result<Vec<Feature>> {
        match atom {
            Atom::Value { cluster, proxy } => {
                let ms = self.members(cluster)?;
                let mut out = Vec::new();
                for m in ms {
                    match (proxy, self.indicator_of.get(&m)) {
                        (true, Some(&r)) => out.push(Feature::Proxy { var: m, ind: r }),
                        (false, Some(_)) if self.source == Source::Manifest => {
                            return Err(Error::Evaluation(format!(
                                "`{cluster}` is not fully observed; the manifest distribution only has its proxy"
                            )))
                        }
                        _ => out.push(Feature::Value(m)),
                    }
                }
                Ok(out)
            }
            Atom::Indicator { r, value } => {
                let lits = self.literal_nodes(r)?;
                Ok(vec![if *value == 0 {
                    Feature::AllZero(lits)
                } else {
                    Feature::AnyOne(lits)
                }])
            }
        }
    }

    /// Model indicators behind an indicator vertex of `g`.
    fn literal_nodes(&self, r: &str) -> Result<Vec<usize>> {
        if self.g.class() == GraphClass::CmCDmg {
            let ix = self.g.index_of(r)?;
            let owner = self
                .g
                .owner(ix)
                .ok_or_else(|| Error::Evaluation(format!("`{r}` is not an indicator")))?;
            Ok(self
                .members(owner)?
                .into_iter()
                .filter_map(|m| self.indicator_of.get(&m).copied())
                .collect())
        } else {
            let n = self.scm.node(r).ok_or_else(|| Error::UnknownVertex(r.to_string()))?;
            Ok(vec![n])
        }
    }

    fn feature_value(&self, f: &Feature, t: &JointTable, strides: &[usize], s: usize) -> usize {
        match f {
            Feature::Value(c) => t.value(strides, s, *c),
            Feature::Proxy { var, ind } => {
                if t.value(strides, s, *ind) == 1 {
                    NA
                } else {
                    t.value(strides, s, *var)
                }
            }
            Feature::AllZero(cs) => usize::from(cs.iter().all(|&c| t.value(strides, s, c) == 0)),
            Feature::AnyOne(cs) => usize::from(cs.iter().any(|&c| t.value(strides, s, c) == 1)),
        }
    }

    fn table(&self, fixed: &[(usize, usize)]) -> Arc<JointTable> {
        if let Some(t) = self.tables.lock().expect("table cache").get(fixed) {
            return t.clone();
        }
        let map: BTreeMap<usize, usize> = fixed.iter().copied().collect();
        let t = Arc::new(self.scm.table(&map, self.mode));
        self.tables
            .lock()
            .expect("table cache")
            .insert(fixed.to_vec(), t.clone());
        t
    }

    fn marginal(&self, atoms: &[Atom], fixed: &[(usize, usize)]) -> Result<Arc<Marginal>> {
        let key = (atoms.to_vec(), fixed.to_vec());
        if let Some(m) = self.marginals.lock().expect("marginal cache").get(&key) {
            return Ok(m.clone());
        }
        let feats: Vec<Feature> = atoms
            .iter()
            .map(|a| self.features(a))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let t = self.table(fixed);
        let strides = t.strides();
        let mut m: Marginal = HashMap::new();
        for (s, &p) in t.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let k: Vec<usize> = feats.iter().map(|f| self.feature_value(f, &t, &strides, s)).collect();
            *m.entry(k).or_insert(0.0) += p;
        }
        let m = Arc::new(m);
        self.marginals.lock().expect("marginal cache").insert(key, m.clone());
        Ok(m)
    }

    fn key(&self, atoms: &[Atom], sigma: &Assignment) -> Result<Vec<usize>> {
        let mut k = Vec::new();
        for a in atoms {
            match a {
                Atom::Value { .. } => {
                    let v = sigma
                        .get(a)
                        .ok_or_else(|| Error::Evaluation(format!("`{}` has no value", a.text())))?;
                    k.extend(v);
                }
                Atom::Indicator { .. } => k.push(1),
            }
        }
        Ok(k)
    }

    pub fn term(&self, t: &Term, sigma: &Assignment) -> Result<f64> {
        if self.source == Source::Manifest && !t.do_set.is_empty() {
            return Err(Error::Evaluation(format!(
                "{} involves an intervention; the manifest distribution cannot evaluate it",
                t.text()
            )));
        }
        let mut fixed = Vec::new();
        for c in &t.do_set {
            let sym = Atom::value(c);
            let v = sigma
                .get(&sym)
                .ok_or_else(|| Error::Evaluation(format!("`{c}` has no value")))?;
            for (m, &x) in self.members(c)?.into_iter().zip(v) {
                if x == NA {
                    return Err(Error::Evaluation(format!(
                        "cannot intervene on `{c}` with a missing value"
                    )));
                }
                fixed.push((m, x));
            }
        }
        fixed.sort_unstable();
        let all: Vec<Atom> = t.outcomes.iter().chain(&t.cond).cloned().collect();
        let cond: Vec<Atom> = t.cond.iter().cloned().collect();
        let num = self
            .marginal(&all, &fixed)?
            .get(&self.key(&all, sigma)?)
            .copied()
            .unwrap_or(0.0);
        if cond.is_empty() {
            return Ok(num);
        }
        let den = self
            .marginal(&cond, &fixed)?
            .get(&self.key(&cond, sigma)?)
            .copied()
            .unwrap_or(0.0);
        if den <= 0.0 {
            let stratum: Vec<String> = cond
                .iter()
                .map(|a| match sigma.get(a) {
                    Some(v) => format!("{}={}", a.text(), render_valuation(v)),
                    None => a.text(),
                })
                .collect();
            return Err(Error::Positivity(stratum.join(", ")));
        }
        Ok(num / den)
    }

    pub fn eval(&self, e: &ProbExpr, sigma: &Assignment) -> Result<f64> {
        match e {
            ProbExpr::One => Ok(1.0),
            ProbExpr::Term(t) => self.term(t, sigma),
            ProbExpr::Product(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= self.eval(f, sigma)?;
                }
                Ok(p)
            }
            ProbExpr::Quotient { num, den } => {
                let d = self.eval(den, sigma)?;
                if d <= 0.0 {
                    return Err(Error::Positivity(format!("denominator {} is zero", den.text())));
                }
                Ok(self.eval(num, sigma)? / d)
            }
            ProbExpr::Sum { over, body } => {
                let mut total = 0.0;
                let mut s = sigma.clone();
                for v in valuations(&self.domain(over)?) {
                    s.insert(over.clone(), v);
                    total += self.eval(body, &s)?;
                }
                Ok(total)
            }
        }
    }
}

/// Interventional table for a macro intervention: every cluster touched by
/// `fixed` must be fixed in full.
pub fn cluster_interventional_table(
    scm: &DiscreteScm,
    clustering: &Clustering,
    fixed: &BTreeMap<String, usize>,
    mode: Parallelism,
) -> Result<JointTable> {
    for v in fixed.keys() {
        let c = clustering
            .cluster_of(v)
            .ok_or_else(|| Error::UnknownVertex(v.clone()))?;
        let ms = clustering.members(c).expect("cluster of a member");
        if ms.iter().any(|m| !fixed.contains_key(m)) {
            return Err(Error::PartialClusterAssignment(c.to_string()));
        }
    }
    scm.interventional_table(fixed, mode)
}

fn render_valuation(v: &[usize]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|&x| if x == NA { "NA".to_string() } else { x.to_string() })
        .collect();
    format!("({})", parts.join(","))
}

/// Cartesian product of per-member ranges.
pub fn valuations(domain: &[Vec<usize>]) -> Vec<Valuation> {
    let mut out = vec![Vec::new()];
    for d in domain {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                d.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Symbols that an expression leaves free, interventions included.
pub fn free_symbols(e: &ProbExpr) -> BTreeSet<Atom> {
    let bound: BTreeSet<String> = e.bound();
    let mut out = BTreeSet::new();
    for (_, t) in e.terms() {
        for a in t.atoms() {
            if let Atom::Value { cluster, .. } = a {
                if !bound.contains(cluster) {
                    out.insert(a.clone());
                }
            }
        }
        for c in &t.do_set {
            out.insert(Atom::value(c));
        }
    }
    out
}

/// Every assignment of `symbols` (each proxy also ranging over missing
/// member values).
pub fn assignments(ev: &Evaluator<'_>, symbols: &BTreeSet<Atom>) -> Result<Vec<Assignment>> {
    let mut out = vec![Assignment::new()];
    for s in symbols {
        let vals = valuations(&ev.domain(s)?);
        out = out
            .into_iter()
            .flat_map(|a| {
                vals.iter().map(move |v| {
                    let mut a = a.clone();
                    a.insert(s.clone(), v.clone());
                    a
                })
            })
            .collect();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GraphBuilder;

    fn mar() -> MixedGraph {
        GraphBuilder::new("mar", GraphClass::MAdmg)
            .var("X")
            .var("Y")
            .indicator("X")
            .edge("Y", "X")
            .edge("Y", "R_X")
            .build()
            .unwrap()
    }

    #[test]
    fn mar_identity_holds_exactly() {
        let g = mar();
        let scm = DiscreteScm::random(&g, 2, 4, 0).unwrap();
        let full = Evaluator::for_variables(&g, &scm, Source::Scm).unwrap();
        let man = Evaluator::for_variables(&g, &scm, Source::Manifest).unwrap();
        let truth: ProbExpr = Term::new([Atom::value("X"), Atom::value("Y")], Vec::<String>::new(), Vec::new()).into();
        let est = ProbExpr::Product(vec![
            Term::new(
                [Atom::proxy("X")],
                Vec::<String>::new(),
                [Atom::value("Y"), Atom::observed("R_X")],
            )
            .into(),
            Term::new([Atom::value("Y")], Vec::<String>::new(), Vec::new()).into(),
        ]);
        for x in 0..2 {
            for y in 0..2 {
                let mut a = Assignment::new();
                a.insert(Atom::value("X"), vec![x]);
                a.insert(Atom::value("Y"), vec![y]);
                let t = full.eval(&truth, &a).unwrap();
                a.insert(Atom::proxy("X"), vec![x]);
                let e = man.eval(&est, &a).unwrap();
                assert!((t - e).abs() < 1e-12);
            }
        }
        assert!(man.eval(&truth, &Assignment::new()).is_err());
    }

    #[test]
    fn proxy_domain_has_missing_value() {
        let g = mar();
        let scm = DiscreteScm::random(&g, 3, 4, 0).unwrap();
        let ev = Evaluator::for_variables(&g, &scm, Source::Scm).unwrap();
        assert_eq!(ev.domain(&Atom::proxy("X")).unwrap(), vec![vec![0, 1, 2, NA]]);
        let p: ProbExpr = Term::new([Atom::proxy("X")], Vec::<String>::new(), Vec::new()).into();
        let total: f64 = assignments(&ev, &free_symbols(&p))
            .unwrap()
            .iter()
            .map(|a| ev.eval(&p, a).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn macro_interventions_fix_whole_clusters() {
        let g = GraphBuilder::new("chain", GraphClass::Admg)
            .var("X1")
            .var("X2")
            .var("Y")
            .edge("X1", "Y")
            .edge("X2", "Y")
            .build()
            .unwrap();
        let scm = DiscreteScm::random(&g, 2, 2, 0).unwrap();
        let c = Clustering::new([("CX", vec!["X1", "X2"]), ("CY", vec!["Y"])]).unwrap();
        let part: BTreeMap<String, usize> = [("X1".to_string(), 0)].into();
        assert!(matches!(
            cluster_interventional_table(&scm, &c, &part, Parallelism::Sequential),
            Err(Error::PartialClusterAssignment(x)) if x == "CX"
        ));
        let full: BTreeMap<String, usize> = [("X1".to_string(), 0), ("X2".to_string(), 1)].into();
        let t = cluster_interventional_table(&scm, &c, &full, Parallelism::Sequential).unwrap();
        assert!((t.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_stratum_is_a_positivity_error() {
        let g = mar();
        let mut scm = DiscreteScm::random(&g, 2, 4, 0).unwrap();
        scm.set_cpt("R_X", vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let ev = Evaluator::for_variables(&g, &scm, Source::Scm).unwrap();
        let t: ProbExpr = Term::new(
            [Atom::value("Y")],
            Vec::<String>::new(),
            [Atom::Indicator {
                r: "R_X".into(),
                value: 1,
            }],
        )
        .into();
        let mut a = Assignment::new();
        a.insert(Atom::value("Y"), vec![0]);
        assert!(matches!(ev.eval(&t, &a), Err(Error::Positivity(_))));
    }
}
