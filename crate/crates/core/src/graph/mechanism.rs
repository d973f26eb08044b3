use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Kind, MixedGraph};
use crate::error::{Error, Result};
use crate::separation::d_separated_ix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mechanism {
    Mcar,
    Mar,
    Mnar,
}

/// Classifies the missingness mechanism encoded for indicator `target`.
pub fn classify_mechanism(g: &MixedGraph, target: &str) -> Result<Mechanism> {
    let r = g.index_of(target)?;
    if g.kind(r) != Kind::Indicator {
        return Err(Error::Precondition(format!("`{target}` is not an indicator")));
    }
    let r_set = BTreeSet::from([r]);
    let substantive: BTreeSet<usize> = g.substantive().into_iter().collect();
    if d_separated_ix(g, &r_set, &substantive, &BTreeSet::new()) {
        return Ok(Mechanism::Mcar);
    }
    let missing = g.partially_observed();
    let observed: BTreeSet<usize> = substantive.difference(&missing).copied().collect();
    if d_separated_ix(g, &r_set, &missing, &observed) {
        return Ok(Mechanism::Mar);
    }
    Ok(Mechanism::Mnar)
}
