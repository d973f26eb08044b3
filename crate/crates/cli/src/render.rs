//! Output renderings of verdicts and derivations.

use std::collections::BTreeSet;
use std::fmt::Write;

use mcdmg_core::docalc::{Atom, Certificate, ProbExpr, SearchOutcome};
use mcdmg_core::joint::JointVerdict;
use mcdmg_core::MixedGraph;
use serde_json::{json, Value};

pub fn verdict_json(g: &MixedGraph, v: &JointVerdict) -> Value {
    json!({
        "graph": g.name(),
        "recoverable": v.recoverable,
        "violations": v.violations.iter().map(|x| json!({
            "cluster": x.cluster,
            "indicator": x.indicator,
            "reason": x.reason,
            "path": x.path.render(),
            "path_vertices": x.path.vertices,
        })).collect::<Vec<_>>(),
        "blankets": v.blankets,
        "formula": v.formula.as_ref().map(ProbExpr::text),
        "latex": v.latex(),
    })
}

pub fn verdict_text(g: &MixedGraph, v: &JointVerdict) -> String {
    let mut s = String::new();
    if v.recoverable {
        let _ = writeln!(s, "{}: joint distribution is recoverable", g.name());
        for b in &v.blankets {
            let mut parts: Vec<String> = b.observed.clone();
            parts.extend(b.missing.iter().map(|c| format!("{c}*")));
            parts.extend(b.literals.iter().map(|r| format!("{r}=0")));
            let _ = writeln!(s, "  MB({}) = {{{}}}", b.indicator, parts.join(", "));
        }
        if let Some(f) = &v.formula {
            let _ = writeln!(s, "  P = {}", f.text());
        }
    } else {
        let _ = writeln!(s, "{}: joint distribution is not recoverable", g.name());
        for x in &v.violations {
            let why = match x.reason {
                mcdmg_core::joint::Reason::Neighbor => "adjacent to its indicator",
                mcdmg_core::joint::Reason::ColliderPath => "collider path to its indicator",
            };
            let _ = writeln!(s, "  {} ({}): {}", x.cluster, why, x.path.render());
        }
    }
    s
}

pub fn verdict_latex(v: &JointVerdict) -> String {
    match v.latex() {
        Some(l) => format!("{l}\n"),
        None => {
            let mut s = String::from("% not recoverable\n");
            for x in &v.violations {
                let _ = writeln!(s, "% {}", x.path.render());
            }
            s
        }
    }
}

fn id_latex(id: &str) -> String {
    if let Some(base) = id.strip_suffix('*') {
        format!("c_{{{base}}}^{{\\ast}}")
    } else if let Some(rest) = id.strip_prefix("R_") {
        format!("R_{{{rest}}}")
    } else {
        format!("c_{{{id}}}")
    }
}

fn set_latex(s: &BTreeSet<String>) -> String {
    s.iter().map(|v| id_latex(v)).collect::<Vec<_>>().join(", ")
}

fn certificate_latex(c: &Certificate) -> String {
    let mut sub = String::new();
    if !c.mutilation.remove_incoming.is_empty() {
        let _ = write!(sub, "\\overline{{{}}}", set_latex(&c.mutilation.remove_incoming));
    }
    if !c.mutilation.remove_outgoing.is_empty() {
        let _ = write!(sub, "\\underline{{{}}}", set_latex(&c.mutilation.remove_outgoing));
    }
    let g = if sub.is_empty() {
        "\\mathcal{G}".to_string()
    } else {
        format!("\\mathcal{{G}}_{{{sub}}}")
    };
    let z = if c.z.is_empty() {
        String::new()
    } else {
        format!(" \\mid {}", set_latex(&c.z))
    };
    format!(
        "({} \\perp\\!\\!\\!\\perp {}{z})_{{{g}}}",
        set_latex(&c.y),
        set_latex(&c.x)
    )
}

/// Partially observed clusters that occur in `e` through their true value
/// rather than their proxy.
pub fn residual_symbols(g: &MixedGraph, e: &ProbExpr) -> Vec<String> {
    let partial = g.ids_of(&g.partially_observed());
    let mut out = BTreeSet::new();
    for (_, t) in e.terms() {
        for a in t.atoms() {
            if let Atom::Value { cluster, proxy: false } = a {
                if partial.contains(cluster) {
                    out.insert(cluster.clone());
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn outcome_json(g: &MixedGraph, q: &ProbExpr, out: &SearchOutcome) -> Value {
    let mut v = json!({
        "graph": g.name(),
        "query": q.text(),
        "query_latex": q.latex(),
    });
    match out {
        SearchOutcome::Derived(d) => {
            v["derived"] = json!(true);
            v["result"] = json!(d.result().text());
            v["result_latex"] = json!(d.result().latex());
            v["rules"] = json!(d.rules().iter().map(|r| r.to_string()).collect::<Vec<_>>());
            v["residual_symbols"] = json!(residual_symbols(g, d.result()));
            v["derivation"] = serde_json::to_value(d).expect("derivation");
        }
        SearchOutcome::NotDerived {
            explored,
            depth_reached,
            exhausted,
        } => {
            v["derived"] = json!(false);
            v["explored"] = json!(explored);
            v["depth_reached"] = json!(depth_reached);
            v["exhausted"] = json!(exhausted);
            v["derivation"] = Value::Null;
        }
    }
    v
}

pub fn outcome_latex(q: &ProbExpr, out: &SearchOutcome) -> String {
    match out {
        SearchOutcome::Derived(d) => {
            let mut s = String::from("\\begin{align*}\n");
            let _ = write!(s, "  & {}", q.latex());
            for step in &d.steps {
                let why = match &step.certificate {
                    Some(c) => format!("\\text{{{}: }} {}", step.rule, certificate_latex(c)),
                    None => format!("\\text{{{}}}", step.rule),
                };
                let _ = write!(s, " \\\\\n  &= {} && {why}", step.after.latex());
            }
            s.push_str("\n\\end{align*}\n");
            s
        }
        SearchOutcome::NotDerived {
            explored,
            depth_reached,
            exhausted,
        } => format!(
            "% {} not derived (explored {explored} expressions to depth {depth_reached}{})\n",
            q.latex(),
            if *exhausted { ", search space exhausted" } else { "" }
        ),
    }
}

pub fn outcome_text(q: &ProbExpr, out: &SearchOutcome) -> String {
    match out {
        SearchOutcome::Derived(d) => {
            let mut s = format!("query:  {}\n", q.text());
            for (i, step) in d.steps.iter().enumerate() {
                let _ = writeln!(s, "{:>3}. [{}] {}", i + 1, step.rule, step.after.text());
                if let Some(c) = &step.certificate {
                    let _ = writeln!(s, "       {}", c.render());
                }
            }
            let _ = writeln!(s, "result: {}", d.result().text());
            s
        }
        SearchOutcome::NotDerived {
            explored,
            depth_reached,
            exhausted,
        } => format!(
            "query:  {}\nnot derived: explored {explored} expressions to depth {depth_reached}{}\n",
            q.text(),
            if *exhausted { " (search space exhausted)" } else { "" }
        ),
    }
}
