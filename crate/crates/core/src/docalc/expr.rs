//! Symbolic probability expressions over cluster valuations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single symbol in a probability term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Atom {
    /// The valuation of a cluster, either its true value or its proxy.
    Value { cluster: String, proxy: bool },
    /// A missingness literal `r = value`.
    Indicator { r: String, value: u8 },
}

impl Atom {
    pub fn value(cluster: impl Into<String>) -> Self {
        Atom::Value {
            cluster: cluster.into(),
            proxy: false,
        }
    }

    pub fn proxy(cluster: impl Into<String>) -> Self {
        Atom::Value {
            cluster: cluster.into(),
            proxy: true,
        }
    }

    pub fn observed(r: impl Into<String>) -> Self {
        Atom::Indicator { r: r.into(), value: 0 }
    }

    pub fn cluster(&self) -> Option<&str> {
        match self {
            Atom::Value { cluster, .. } => Some(cluster),
            Atom::Indicator { .. } => None,
        }
    }

    pub fn is_proxy(&self) -> bool {
        matches!(self, Atom::Value { proxy: true, .. })
    }

    pub fn text(&self) -> String {
        match self {
            Atom::Value { cluster, proxy } => {
                if *proxy {
                    format!("{cluster}*")
                } else {
                    cluster.clone()
                }
            }
            Atom::Indicator { r, value } => format!("{r}={value}"),
        }
    }

    pub fn latex(&self) -> String {
        match self {
            Atom::Value { cluster, proxy } => {
                let star = if *proxy { "^{\\ast}" } else { "" };
                format!("c_{{{}}}{star}", latex_ident(cluster))
            }
            Atom::Indicator { r, value } => format!("{}={value}", latex_subscripted(r)),
        }
    }
}

fn latex_ident(s: &str) -> String {
    s.replace('_', "\\_")
}

/// `R_CY` → `R_{CY}`.
fn latex_subscripted(s: &str) -> String {
    match s.split_once('_') {
        Some((head, tail)) if !head.is_empty() && !tail.is_empty() => {
            format!("{head}_{{{}}}", latex_ident(tail))
        }
        _ => latex_ident(s),
    }
}

/// `P(outcomes | do(do_set), cond)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Term {
    pub outcomes: BTreeSet<Atom>,
    pub do_set: BTreeSet<String>,
    pub cond: BTreeSet<Atom>,
}

impl Term {
    pub fn new<O, D, C, S>(outcomes: O, do_set: D, cond: C) -> Self
    where
        O: IntoIterator<Item = Atom>,
        D: IntoIterator<Item = S>,
        S: Into<String>,
        C: IntoIterator<Item = Atom>,
    {
        Term {
            outcomes: outcomes.into_iter().collect(),
            do_set: do_set.into_iter().map(Into::into).collect(),
            cond: cond.into_iter().collect(),
        }
    }

    /// Every atom in outcomes or conditioning set.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.outcomes.iter().chain(&self.cond)
    }

    /// Clusters named anywhere in the term, interventions included.
    pub fn clusters(&self) -> BTreeSet<&str> {
        self.atoms()
            .filter_map(Atom::cluster)
            .chain(self.do_set.iter().map(String::as_str))
            .collect()
    }

    pub fn mentions_cluster(&self, c: &str) -> bool {
        self.clusters().contains(c)
    }

    pub fn has_literal(&self, r: &str) -> bool {
        self.cond.contains(&Atom::observed(r)) || self.outcomes.contains(&Atom::observed(r))
    }

    pub fn text(&self) -> String {
        let out: Vec<String> = self.outcomes.iter().map(Atom::text).collect();
        let mut given: Vec<String> = Vec::new();
        if !self.do_set.is_empty() {
            let d: Vec<&str> = self.do_set.iter().map(String::as_str).collect();
            given.push(format!("do({})", d.join(", ")));
        }
        given.extend(self.cond.iter().map(Atom::text));
        if given.is_empty() {
            format!("P({})", out.join(", "))
        } else {
            format!("P({} | {})", out.join(", "), given.join(", "))
        }
    }

    pub fn latex(&self) -> String {
        let out: Vec<String> = self.outcomes.iter().map(Atom::latex).collect();
        let mut given: Vec<String> = Vec::new();
        if !self.do_set.is_empty() {
            let d: Vec<String> = self
                .do_set
                .iter()
                .map(|c| format!("c_{{{}}}", latex_ident(c)))
                .collect();
            given.push(format!("\\mathrm{{do}}({})", d.join(", ")));
        }
        given.extend(self.cond.iter().map(Atom::latex));
        if given.is_empty() {
            format!("\\Pr({})", out.join(", "))
        } else {
            format!("\\Pr({} \\mid {})", out.join(", "), given.join(", "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "node", content = "of", rename_all = "lowercase")]
pub enum ProbExpr {
    One,
    Term(Term),
    /// Sum over the valuations of `over` (a value atom).
    Sum {
        over: Atom,
        body: Box<ProbExpr>,
    },
    Product(Vec<ProbExpr>),
    Quotient {
        num: Box<ProbExpr>,
        den: Box<ProbExpr>,
    },
}

impl From<Term> for ProbExpr {
    fn from(t: Term) -> Self {
        ProbExpr::Term(t)
    }
}

impl ProbExpr {
    pub fn sum(over: Atom, body: ProbExpr) -> Self {
        ProbExpr::Sum {
            over,
            body: Box::new(body),
        }
    }

    pub fn quotient(num: ProbExpr, den: ProbExpr) -> Self {
        ProbExpr::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    /// Canonical representative: products flattened and sorted, `One`
    /// factors dropped, runs of nested sums sorted by bound symbol, nested
    /// quotients collapsed to one fraction.
    pub fn canonical(&self) -> ProbExpr {
        match self {
            ProbExpr::One | ProbExpr::Term(_) => self.clone(),
            ProbExpr::Product(fs) => {
                let mut flat = Vec::new();
                for f in fs {
                    match f.canonical() {
                        ProbExpr::One => {}
                        ProbExpr::Product(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                match flat.len() {
                    0 => ProbExpr::One,
                    1 => flat.pop().expect("one factor"),
                    _ => ProbExpr::Product(flat),
                }
            }
            ProbExpr::Sum { .. } => {
                let mut bounds = Vec::new();
                let mut cur = self;
                while let ProbExpr::Sum { over, body } = cur {
                    bounds.push(over.clone());
                    cur = body;
                }
                let body = cur.canonical();
                bounds.sort();
                bounds.into_iter().rev().fold(body, |acc, b| ProbExpr::sum(b, acc))
            }
            ProbExpr::Quotient { num, den } => {
                let (n, d) = (num.canonical(), den.canonical());
                let (n, d) = match (n, d) {
                    (ProbExpr::Quotient { num: a, den: b }, ProbExpr::Quotient { num: c, den: e }) => {
                        (ProbExpr::Product(vec![*a, *e]), ProbExpr::Product(vec![*b, *c]))
                    }
                    (ProbExpr::Quotient { num: a, den: b }, d) => (*a, ProbExpr::Product(vec![*b, d])),
                    (n, ProbExpr::Quotient { num: c, den: e }) => (ProbExpr::Product(vec![n, *e]), *c),
                    (n, d) => (n, d),
                };
                let (n, d) = (n.canonical(), d.canonical());
                if d == ProbExpr::One {
                    n
                } else {
                    ProbExpr::quotient(n, d)
                }
            }
        }
    }

    pub fn canonical_eq(&self, other: &ProbExpr) -> bool {
        self.canonical() == other.canonical()
    }

    /// Visits every term with its site path (child indices from the root).
    pub fn terms(&self) -> Vec<(Vec<usize>, &Term)> {
        let mut out = Vec::new();
        self.collect_terms(&mut Vec::new(), &mut out);
        out
    }

    fn collect_terms<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Term)>) {
        match self {
            ProbExpr::One => {}
            ProbExpr::Term(t) => out.push((path.clone(), t)),
            ProbExpr::Sum { body, .. } => {
                path.push(0);
                body.collect_terms(path, out);
                path.pop();
            }
            ProbExpr::Product(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    path.push(i);
                    f.collect_terms(path, out);
                    path.pop();
                }
            }
            ProbExpr::Quotient { num, den } => {
                path.push(0);
                num.collect_terms(path, out);
                path.pop();
                path.push(1);
                den.collect_terms(path, out);
                path.pop();
            }
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&ProbExpr> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(self);
        };
        match self {
            ProbExpr::Sum { body, .. } if i == 0 => body.at(rest),
            ProbExpr::Product(fs) => fs.get(i)?.at(rest),
            ProbExpr::Quotient { num, .. } if i == 0 => num.at(rest),
            ProbExpr::Quotient { den, .. } if i == 1 => den.at(rest),
            _ => None,
        }
    }

    /// Copy of `self` with the subexpression at `path` replaced.
    pub fn replace_at(&self, path: &[usize], new: ProbExpr) -> Option<ProbExpr> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(new);
        };
        Some(match self {
            ProbExpr::Sum { over, body } if i == 0 => ProbExpr::Sum {
                over: over.clone(),
                body: Box::new(body.replace_at(rest, new)?),
            },
            ProbExpr::Product(fs) => {
                let mut fs = fs.clone();
                let slot = fs.get_mut(i)?;
                *slot = slot.replace_at(rest, new)?;
                ProbExpr::Product(fs)
            }
            ProbExpr::Quotient { num, den } if i == 0 => ProbExpr::Quotient {
                num: Box::new(num.replace_at(rest, new)?),
                den: den.clone(),
            },
            ProbExpr::Quotient { num, den } if i == 1 => ProbExpr::Quotient {
                num: num.clone(),
                den: Box::new(den.replace_at(rest, new)?),
            },
            _ => return None,
        })
    }

    /// Clusters named anywhere, bound symbols included.
    pub fn clusters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e {
            ProbExpr::Term(t) => out.extend(t.clusters().into_iter().map(String::from)),
            ProbExpr::Sum { over, .. } => out.extend(over.cluster().map(String::from)),
            _ => {}
        });
        out
    }

    /// Clusters bound by a sum somewhere in the expression.
    pub fn bound(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let ProbExpr::Sum { over, .. } = e {
                out.extend(over.cluster().map(String::from));
            }
        });
        out
    }

    fn walk<F: FnMut(&ProbExpr)>(&self, f: &mut F) {
        f(self);
        match self {
            ProbExpr::One | ProbExpr::Term(_) => {}
            ProbExpr::Sum { body, .. } => body.walk(f),
            ProbExpr::Product(fs) => fs.iter().for_each(|x| x.walk(f)),
            ProbExpr::Quotient { num, den } => {
                num.walk(f);
                den.walk(f);
            }
        }
    }

    pub fn has_do(&self) -> bool {
        self.terms().iter().any(|(_, t)| !t.do_set.is_empty())
    }

    pub fn text(&self) -> String {
        match self {
            ProbExpr::One => "1".into(),
            ProbExpr::Term(t) => t.text(),
            ProbExpr::Sum { over, body } => format!("sum_{{{}}} {}", over.text(), body.text()),
            ProbExpr::Product(fs) => fs
                .iter()
                .map(|f| match f {
                    ProbExpr::Sum { .. } | ProbExpr::Quotient { .. } => format!("[{}]", f.text()),
                    _ => f.text(),
                })
                .collect::<Vec<_>>()
                .join(" * "),
            ProbExpr::Quotient { num, den } => format!("({}) / ({})", num.text(), den.text()),
        }
    }

    pub fn latex(&self) -> String {
        match self {
            ProbExpr::One => "1".into(),
            ProbExpr::Term(t) => t.latex(),
            ProbExpr::Sum { over, body } => format!("\\sum_{{{}}} {}", over.latex(), body.latex()),
            ProbExpr::Product(fs) => fs
                .iter()
                .map(|f| match f {
                    ProbExpr::Sum { .. } => format!("\\left[{}\\right]", f.latex()),
                    _ => f.latex(),
                })
                .collect::<Vec<_>>()
                .join(" \\, "),
            ProbExpr::Quotient { num, den } => {
                format!("\\frac{{{}}}{{{}}}", num.latex(), den.latex())
            }
        }
    }
}

impl fmt::Display for ProbExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
