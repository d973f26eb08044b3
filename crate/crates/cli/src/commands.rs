use std::fs;
use std::path::Path;

use mcdmg_core::abstraction::{enumerate_compatible, is_compatible, pi, project, sample_compatible, Budget, Level};
use mcdmg_core::docalc::{self, derive, effect_query, example_plan, Plan, SearchConfig, SearchOutcome};
use mcdmg_core::graph::emit::{emit_dot, emit_graph, graph_json};
use mcdmg_core::graph::parse::parse_graph_unchecked;
use mcdmg_core::graph::validate as validate_graph;
use mcdmg_core::joint::{self, construct_witness};
use mcdmg_core::oracle::{self, check_derivation, check_joint_formula, find_witness_pair, OracleConfig};
use mcdmg_core::separation::{d_separation, mutilate, MutilationSpec};
use mcdmg_core::{parse_clustering, parse_graph, Error, GraphClass, MixedGraph};
use serde_json::{json, Value};

use crate::render;
use crate::{DataFormat, Format, GraphInput, LevelArg, Verdict};

pub type Result = std::result::Result<(String, Verdict), Box<dyn std::error::Error>>;

fn read(path: &Path) -> std::result::Result<String, Box<dyn std::error::Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(path: &Path) -> std::result::Result<MixedGraph, Box<dyn std::error::Error>> {
    let text = read(path)?;
    parse_graph(&text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

fn positive_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Positive
    } else {
        Verdict::Negative
    }
}

fn unsupported(cmd: &str, f: Format) -> Box<dyn std::error::Error> {
    format!("`{cmd}` does not support --format {f:?}").to_lowercase().into()
}

fn graph_out(g: &MixedGraph, format: Format, cmd: &str) -> std::result::Result<String, Box<dyn std::error::Error>> {
    match format {
        Format::Text => Ok(emit_graph(g)),
        Format::Json => Ok(pretty(&graph_json(g))),
        Format::Dot => Ok(emit_dot(g)),
        Format::Latex => Err(unsupported(cmd, format)),
    }
}

pub fn parse(input: &GraphInput, format: Format) -> Result {
    let g = load(&input.file)?;
    Ok((graph_out(&g, format, "parse")?, Verdict::Positive))
}

pub fn validate(input: &GraphInput) -> Result {
    let text = read(&input.file)?;
    let g = parse_graph_unchecked(&text).map_err(|e| format!("{}: {e}", input.file.display()))?;
    let violations = validate_graph(&g);
    let out = json!({
        "graph": g.name(),
        "class": g.class(),
        "valid": violations.is_empty(),
        "violations": violations,
    });
    Ok((pretty(&out), positive_if(violations.is_empty())))
}

pub fn dsep(
    input: &GraphInput,
    x: &[String],
    y: &[String],
    given: &[String],
    overline: &[String],
    underline: &[String],
) -> Result {
    let g = load(&input.file)?;
    let spec = MutilationSpec::overline(overline).and_underline(underline);
    let m = if spec.is_empty() { g } else { mutilate(&g, &spec)? };
    let s = d_separation(&m, x, y, given)?;
    let out = json!({
        "separated": s.separated,
        "witness_path": s.witness_path.as_ref().map(|w| w.vertices.clone()),
        "witness": s.witness_path.as_ref().map(|w| w.render()),
        "graph": spec.render(),
    });
    Ok((pretty(&out), Verdict::Positive))
}

pub fn abstract_graph(input: &GraphInput, clustering: Option<&Path>, level: LevelArg, format: Format) -> Result {
    let g = load(&input.file)?;
    let level = match level {
        LevelArg::CDmg => Level::CDmg,
        LevelArg::MCDmg => Level::MCDmg,
        LevelArg::CmCDmg => Level::CmCDmg,
    };
    let out = match g.class() {
        GraphClass::Admg | GraphClass::MAdmg => {
            let path = clustering.ok_or("variable-level input needs --clustering")?;
            let c = parse_clustering(&read(path)?)?;
            project(&g, &c, level)?
        }
        GraphClass::MCDmg | GraphClass::CmCDmg => pi(&g)?,
        GraphClass::CDmg => {
            return Err("a c-dmg has no indicators to merge; pass a variable-level graph with --clustering".into())
        }
    };
    Ok((graph_out(&out, format, "abstract")?, Verdict::Positive))
}

pub fn compatible(abstract_file: &Path, madmg_file: &Path, clustering: &Path) -> Result {
    let abs = load(abstract_file)?;
    let g = load(madmg_file)?;
    let c = parse_clustering(&read(clustering)?)?;
    let r = is_compatible(&g, &abs, &c)?;
    let ok = r.compatible;
    Ok((pretty(&serde_json::to_value(r)?), positive_if(ok)))
}

pub fn enumerate(
    input: &GraphInput,
    max_vars: usize,
    max_edges: Option<usize>,
    limit: Option<usize>,
    labeled: bool,
    format: Format,
) -> Result {
    let abs = load(&input.file)?;
    let mut budget = Budget::new(max_vars);
    budget.max_edges = max_edges;
    budget.limit = limit;
    budget.canonical = !labeled;
    let graphs = match enumerate_compatible(&abs, &budget) {
        Ok(gs) => gs,
        Err(Error::BudgetTooSmall(msg)) => {
            eprintln!("note: {msg}");
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let verdict = positive_if(!graphs.is_empty());
    let out = match format {
        Format::Json => pretty(&json!({
            "count": graphs.len(),
            "graphs": graphs.iter().map(graph_json).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = format!("# {} compatible graphs\n", graphs.len());
            for g in &graphs {
                s.push('\n');
                s.push_str(&emit_graph(g));
            }
            s
        }
        f => return Err(unsupported("enumerate", f)),
    };
    Ok((out, verdict))
}

pub fn check_joint(input: &GraphInput, format: Format) -> Result {
    let g = load(&input.file)?;
    let v = joint::check_joint(&g)?;
    let verdict = positive_if(v.recoverable);
    let out = match format {
        Format::Json => pretty(&render::verdict_json(&g, &v)),
        Format::Text => render::verdict_text(&g, &v),
        Format::Latex => render::verdict_latex(&v),
        f => return Err(unsupported("check-joint", f)),
    };
    Ok((out, verdict))
}

fn search(
    g: &MixedGraph,
    treatment: &[String],
    outcome: &[String],
    given: &[String],
    depth: usize,
) -> std::result::Result<(docalc::ProbExpr, SearchOutcome), Box<dyn std::error::Error>> {
    for v in treatment.iter().chain(outcome).chain(given) {
        if !g.contains(v) {
            return Err(Error::UnknownVertex(v.clone()).into());
        }
    }
    let q = effect_query(outcome, treatment, given);
    let cfg = SearchConfig {
        max_depth: depth,
        ..Default::default()
    };
    let out = derive(g, &q, &cfg)?;
    Ok((q, out))
}

pub fn recover_effect(
    input: &GraphInput,
    treatment: &[String],
    outcome: &[String],
    given: &[String],
    depth: usize,
    format: Format,
) -> Result {
    let g = load(&input.file)?;
    let (q, out) = search(&g, treatment, outcome, given, depth)?;
    let verdict = positive_if(out.derivation().is_some());
    let text = match format {
        Format::Json => pretty(&render::outcome_json(&g, &q, &out)),
        Format::Latex => render::outcome_latex(&q, &out),
        Format::Text => render::outcome_text(&q, &out),
        f => return Err(unsupported("recover-effect", f)),
    };
    Ok((text, verdict))
}

pub fn replay(input: &GraphInput, plan: Option<&Path>) -> Result {
    let g = load(&input.file)?;
    let plan: Plan = match plan {
        None => example_plan(),
        Some(p) => {
            let v: Value = serde_json::from_str(&read(p)?)?;
            let v = match v.get("derivation") {
                Some(Value::Null) => return Err(format!("{}: no derivation to replay", p.display()).into()),
                Some(d) => d.clone(),
                None => v,
            };
            serde_json::from_value(v).map_err(|e| format!("{}: {e}", p.display()))?
        }
    };
    let r = docalc::replay(&g, &plan);
    let ok = r.valid;
    Ok((pretty(&serde_json::to_value(r)?), positive_if(ok)))
}

pub struct OracleArgs {
    pub max_vars: usize,
    pub graphs: usize,
    pub seeds: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub depth: usize,
}

fn with_report(mut head: Value, r: &oracle::OracleReport) -> Value {
    if let (Value::Object(h), Value::Object(b)) = (&mut head, serde_json::to_value(r).expect("report")) {
        h.extend(b);
    }
    head
}

pub fn oracle(input: &GraphInput, query: &str, a: OracleArgs) -> Result {
    let g = load(&input.file)?;
    let cfg = OracleConfig {
        graphs: a.graphs,
        models: a.seeds,
        seed: a.seed,
        max_vars_per_cluster: a.max_vars,
        tolerance: a.tolerance,
        ..Default::default()
    };
    let parts: Vec<&str> = query.split(':').collect();
    match parts.as_slice() {
        ["joint"] => {
            let v = joint::check_joint(&g)?;
            if let Some(f) = &v.formula {
                let r = check_joint_formula(&g, f, &cfg)?;
                let ok = r.passed();
                let head = json!({"query": "joint", "recoverable": true, "formula": f.text()});
                return Ok((pretty(&with_report(head, &r)), positive_if(ok)));
            }
            let violation = &v.violations[0];
            let mut out = json!({
                "query": "joint",
                "recoverable": false,
                "violation": violation.path.render(),
            });
            match construct_witness(&g, violation).and_then(|m| {
                let w = find_witness_pair(&m, a.seed)?;
                Ok((m, w))
            }) {
                Ok((m, w)) => {
                    out["witness_graph"] = json!(emit_graph(&m));
                    out["witness"] = serde_json::to_value(&w.summary)?;
                }
                Err(e) => {
                    out["witness"] = Value::Null;
                    out["witness_error"] = json!(e.to_string());
                }
            }
            Ok((pretty(&out), Verdict::Negative))
        }
        ["effect", t, o] => {
            let (t, o) = (vec![t.to_string()], vec![o.to_string()]);
            let (q, out) = search(&g, &t, &o, &[], a.depth)?;
            let head = json!({"query": q.text()});
            match out.derivation() {
                Some(d) => {
                    let r = check_derivation(&g, d, &cfg)?;
                    let ok = r.passed();
                    let mut head = head;
                    head["derived"] = json!(true);
                    head["result"] = json!(d.result().text());
                    Ok((pretty(&with_report(head, &r)), positive_if(ok)))
                }
                None => {
                    let mut head = head;
                    head["derived"] = json!(false);
                    Ok((pretty(&head), Verdict::Negative))
                }
            }
        }
        _ => Err(format!("unknown query `{query}`; expected `joint` or `effect:<treatment>:<outcome>`").into()),
    }
}

/// Cluster-level input is first realized as one compatible m-ADMG drawn
/// from `seed`.
pub fn simulate(input: &GraphInput, rows: usize, seed: u64, card: usize, out: DataFormat) -> Result {
    let g = load(&input.file)?;
    let g = match g.class() {
        GraphClass::MCDmg | GraphClass::CmCDmg | GraphClass::CDmg => sample_compatible(&g, &Budget::new(2), 1, seed)?
            .pop()
            .ok_or("no compatible variable-level graph")?,
        _ => g,
    };
    let scm = oracle::DiscreteScm::random(&g, card, seed, 0)?;
    let data = oracle::simulate(&scm, rows, seed);
    match out {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&data.columns)?;
            for row in &data.rows {
                w.write_record(row.iter().map(|c| match c {
                    Some(v) => v.to_string(),
                    None => "NA".to_string(),
                }))?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            Ok((String::from_utf8(bytes)?, Verdict::Positive))
        }
    }
}
