//! Pairs of models that agree on everything recorded but disagree on the
//! joint distribution, and a few fixed textbook models.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scm::{DiscreteScm, JointTable};
use crate::error::{Error, Result};
use crate::graph::{GraphClass, Kind, MixedGraph};
use crate::par::Parallelism;
use crate::GraphBuilder;

/// Required agreement of the two manifest distributions.
pub const MANIFEST_TOL: f64 = 1e-9;
/// Required disagreement of the two joint distributions.
pub const JOINT_GAP: f64 = 1e-2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub manifest_diff: f64,
    pub joint_diff: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct WitnessPair {
    pub first: DiscreteScm,
    pub second: DiscreteScm,
    pub summary: WitnessSummary,
}

/// Distribution of what is recorded: fully observed variables, indicators
/// and proxies (missing as an extra value), in a fixed key order.
pub fn manifest_distribution(scm: &DiscreteScm, t: &JointTable) -> BTreeMap<Vec<usize>, f64> {
    let strides = t.strides();
    let masked: BTreeMap<usize, usize> = scm
        .proxies()
        .iter()
        .map(|(_, v, r)| (scm.node(v).expect("variable"), scm.node(r).expect("indicator")))
        .collect();
    let mut out = BTreeMap::new();
    for (s, &p) in t.probs.iter().enumerate() {
        let key: Vec<usize> = (0..scm.names().len())
            .map(|i| match masked.get(&i) {
                Some(&r) if t.value(&strides, s, r) == 1 => scm.cards()[i],
                _ => t.value(&strides, s, i),
            })
            .collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

/// Marginal distribution of the substantive variables.
pub fn variable_distribution(scm: &DiscreteScm, t: &JointTable) -> BTreeMap<Vec<usize>, f64> {
    let strides = t.strides();
    let vars: Vec<usize> = (0..scm.names().len())
        .filter(|&i| scm.kind(i) == Kind::Variable)
        .collect();
    let mut out = BTreeMap::new();
    for (s, &p) in t.probs.iter().enumerate() {
        let key: Vec<usize> = vars.iter().map(|&i| t.value(&strides, s, i)).collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

fn max_gap(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    a.iter()
        .map(|(k, p)| (p - b.get(k).copied().unwrap_or(0.0)).abs())
        .chain(b.iter().map(|(k, p)| (p - a.get(k).copied().unwrap_or(0.0)).abs()))
        .fold(0.0, f64::max)
}

/// Softmax coordinates: each distribution block is the softmax of its own
/// slice of `z`.
struct Coords {
    base: DiscreteScm,
    blocks: Vec<usize>,
}

impl Coords {
    fn to_params(&self, z: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(z.len());
        let mut k = 0;
        for &w in &self.blocks {
            let s = &z[k..k + w];
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
            let tot: f64 = e.iter().sum();
            out.extend(e.iter().map(|x| x / tot));
            k += w;
        }
        out
    }

    fn model(&self, z: &[f64]) -> DiscreteScm {
        self.base.with_parameters(&self.to_params(z))
    }

    fn outputs(&self, z: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let m = self.model(z);
        let t = m.observational(Parallelism::Sequential);
        let man: Vec<f64> = manifest_distribution(&m, &t).into_values().collect();
        let joint: Vec<f64> = variable_distribution(&m, &t).into_values().collect();
        (DVector::from_vec(man), DVector::from_vec(joint))
    }

    fn jacobians(&self, z: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = 1e-6;
        let (m0, j0) = self.outputs(z);
        let mut jm = DMatrix::zeros(m0.len(), z.len());
        let mut jj = DMatrix::zeros(j0.len(), z.len());
        let mut zp = z.to_vec();
        for i in 0..z.len() {
            zp[i] = z[i] + h;
            let (mp, jp) = self.outputs(&zp);
            zp[i] = z[i] - h;
            let (mn, jn) = self.outputs(&zp);
            zp[i] = z[i];
            jm.set_column(i, &((mp - mn) / (2.0 * h)));
            jj.set_column(i, &((jp - jn) / (2.0 * h)));
        }
        (jm, jj)
    }

    /// Gauss-Newton back onto the manifest level set `target`.
    fn project(&self, z: &mut [f64], target: &DVector<f64>) -> Option<f64> {
        for _ in 0..60 {
            let (m, _) = self.outputs(z);
            let r = &m - target;
            let err = r.amax();
            if err <= MANIFEST_TOL * 1e-2 {
                return Some(err);
            }
            let (jm, _) = self.jacobians(z);
            let svd = jm.svd(true, true);
            let delta = svd.solve(&r, 1e-10).ok()?;
            for (zi, d) in z.iter_mut().zip(delta.iter()) {
                *zi -= d;
            }
        }
        let (m, _) = self.outputs(z);
        let err = (&m - target).amax();
        (err <= MANIFEST_TOL).then_some(err)
    }
}

/// Searches for a second model with the same manifest distribution as a
/// random first one but a joint distribution at least [`JOINT_GAP`] away.
/// Moves along the directions the recorded data cannot see that change
/// the joint the most, projecting back onto the level set after each
/// step.
pub fn find_witness_pair(g: &MixedGraph, seed: u64) -> Result<WitnessPair> {
    if g.class() != GraphClass::MAdmg {
        return Err(Error::WrongGraphClass {
            expected: "m-admg".into(),
            found: g.class().to_string(),
        });
    }
    let first = DiscreteScm::random(g, 2, seed, 0)?;
    let coords = Coords {
        blocks: first.parameter_blocks(),
        base: first.clone(),
    };
    let z0: Vec<f64> = first.parameters().iter().map(|p| p.ln()).collect();
    let (m0, j0) = coords.outputs(&z0);
    let mut z = z0.clone();
    let mut iterations = 0;
    let mut gap = 0.0;
    while iterations < 40 {
        iterations += 1;
        let (jm, jj) = coords.jacobians(&z);
        let n = z.len();
        let square = if jm.nrows() < n {
            jm.clone().resize_vertically(n, 0.0)
        } else {
            jm.clone()
        };
        let svd = square.svd(false, true);
        let vt = svd.v_t.as_ref().expect("right singular vectors");
        let cut = 1e-7 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        let null: Vec<DVector<f64>> = (0..vt.nrows())
            .filter(|&i| svd.singular_values[i] <= cut)
            .map(|i| vt.row(i).transpose())
            .collect();
        if null.is_empty() {
            return Err(Error::Evaluation("the recorded data pin down every parameter".into()));
        }
        let basis = DMatrix::from_columns(&null);
        let proj = &jj * &basis;
        let ps = proj.clone().svd(true, true);
        let top = ps.singular_values.max();
        if top < 1e-9 {
            return Err(Error::Evaluation(
                "no parameter change invisible to the recorded data moves the joint".into(),
            ));
        }
        let best = (0..ps.singular_values.len())
            .max_by(|&a, &b| ps.singular_values[a].total_cmp(&ps.singular_values[b]))
            .expect("singular value");
        let dir = &basis * ps.v_t.as_ref().expect("vectors").row(best).transpose();
        let mut step = (2.0 * JOINT_GAP / top).min(1.0);
        let mut moved = false;
        for _ in 0..12 {
            let mut cand: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            if coords.project(&mut cand, &m0).is_some() {
                z = cand;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return Err(Error::Evaluation("could not stay on the manifest level set".into()));
        }
        let (_, j) = coords.outputs(&z);
        gap = (&j - &j0).amax();
        if gap >= 2.0 * JOINT_GAP {
            break;
        }
    }
    let second = coords.model(&z);
    let (m, _) = coords.outputs(&z);
    let manifest_diff = (&m - &m0).amax();
    if gap < JOINT_GAP || manifest_diff > MANIFEST_TOL {
        return Err(Error::Evaluation(format!(
            "witness search stalled (joint gap {gap:.3e}, manifest gap {manifest_diff:.3e})"
        )));
    }
    // Recompute both gaps from scratch on the returned models.
    let (t1, t2) = (
        first.observational(Parallelism::Sequential),
        second.observational(Parallelism::Sequential),
    );
    let summary = WitnessSummary {
        manifest_diff: max_gap(
            &manifest_distribution(&first, &t1),
            &manifest_distribution(&second, &t2),
        ),
        joint_diff: max_gap(
            &variable_distribution(&first, &t1),
            &variable_distribution(&second, &t2),
        ),
        iterations,
    };
    Ok(WitnessPair { first, second, summary })
}

/// `X -> R_X` with `P(X=1)=0.5`, `P(R_X=1|X=1)=0.8`, `P(R_X=1|X=0)=0.1`.
pub fn self_masking_example() -> (MixedGraph, DiscreteScm) {
    let g = GraphBuilder::new("self-masking", GraphClass::MAdmg)
        .var("X")
        .indicator("X")
        .edge("X", "R_X")
        .build()
        .expect("valid graph");
    let mut scm = DiscreteScm::structure(&g, 2).expect("small model");
    scm.set_cpt("X", vec![0.5, 0.5]).expect("table");
    scm.set_cpt("R_X", vec![0.9, 0.1, 0.2, 0.8]).expect("table");
    (g, scm)
}
