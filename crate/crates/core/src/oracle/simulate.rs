//! Sampling incomplete data sets from a model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scm::DiscreteScm;
use crate::graph::Kind;

/// Rows of variable values, `None` where the indicator reads missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<usize>>>,
}

impl Dataset {
    pub fn missing_rate(&self, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|x| x == column)?;
        if self.rows.is_empty() {
            return Some(0.0);
        }
        let n = self.rows.iter().filter(|r| r[c].is_none()).count();
        Some(n as f64 / self.rows.len() as f64)
    }
}

pub fn simulate(scm: &DiscreteScm, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = scm.topological_order();
    let vars: Vec<usize> = (0..scm.names().len())
        .filter(|&i| scm.kind(i) == Kind::Variable)
        .collect();
    let mask: Vec<Option<usize>> = vars
        .iter()
        .map(|&v| {
            scm.proxies()
                .iter()
                .find(|(_, x, _)| *x == scm.names()[v])
                .and_then(|(_, _, r)| scm.node(r))
        })
        .collect();
    let rows = (0..n)
        .map(|_| {
            let s = scm.sample_state(&order, &mut rng);
            vars.iter()
                .zip(&mask)
                .map(|(&v, m)| match m {
                    Some(r) if s[*r] == 1 => None,
                    _ => Some(s[v]),
                })
                .collect()
        })
        .collect();
    Dataset {
        columns: vars.iter().map(|&v| scm.names()[v].clone()).collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::witness::self_masking_example;

    #[test]
    fn missingness_rate_matches_model() {
        let (_, scm) = self_masking_example();
        let d = simulate(&scm, 100_000, 3);
        assert_eq!(d.columns, vec!["X".to_string()]);
        // P(R_X = 1) = 0.5 * 0.8 + 0.5 * 0.1
        assert!((d.missing_rate("X").unwrap() - 0.45).abs() < 0.01);
        assert_eq!(simulate(&scm, 50, 9), simulate(&scm, 50, 9));
    }
}
