use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    p.to_str().unwrap().to_string()
}

fn mcdmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcdmg"))
        .args(args)
        .env_remove("MCDMG_SEED")
        .output()
        .expect("run mcdmg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn conforms(schema: &str, v: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{schema}.schema.json"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&s).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(v)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

/// Compares against `tests/golden/<name>`; `MCDMG_BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("MCDMG_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {name}"));
    assert_eq!(actual, want, "golden {name}");
}

#[test]
fn check_joint_goldens() {
    let o = mcdmg(&["check-joint", &fixture("fig2b.mcg")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("check-joint", &v);
    assert_eq!(v["recoverable"], true);
    golden("check_joint_fig2b.json", &stdout(&o));

    let o = mcdmg(&["check-joint", &fixture("fig3.mcg"), "--format", "text"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("CY <-> CZ <-> R_CY"));
    golden("check_joint_fig3.txt", &stdout(&o));

    let o = mcdmg(&["check-joint", &fixture("fig3.mcg")]);
    conforms("check-joint", &json(&o));

    let o = mcdmg(&["check-joint", &fixture("fig2b.mcg"), "--format", "latex"]);
    assert!(stdout(&o).starts_with("\\frac{"));
}

#[test]
fn recover_effect_goldens() {
    let o = mcdmg(&[
        "recover-effect",
        &fixture("fig3.mcg"),
        "--treatment",
        "CX",
        "--outcome",
        "CY",
    ]);
    assert_eq!(o.status.code(), Some(0));
    golden("recover_effect_fig3.tex", &stdout(&o));

    let o = mcdmg(&[
        "recover-effect",
        &fixture("fig2b.mcg"),
        "--treatment",
        "CX",
        "--outcome",
        "CY",
        "--format",
        "text",
    ]);
    assert_eq!(o.status.code(), Some(0));
    golden("recover_effect_fig2b.txt", &stdout(&o));

    let o = mcdmg(&[
        "recover-effect",
        &fixture("fig3.mcg"),
        "--treatment",
        "CX",
        "--outcome",
        "CY",
        "--format",
        "json",
    ]);
    let v = json(&o);
    conforms("recover-effect", &v);
    assert_eq!(v["residual_symbols"], serde_json::json!([]));
}

#[test]
fn derivation_json_replays() {
    let dir = std::env::temp_dir().join(format!("mcdmg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let plan = dir.join("d.json");
    let o = mcdmg(&[
        "recover-effect",
        &fixture("fig3.mcg"),
        "--treatment",
        "CX",
        "--outcome",
        "CY",
        "--format",
        "json",
    ]);
    std::fs::write(&plan, &o.stdout).unwrap();
    let o = mcdmg(&["replay", &fixture("fig3.mcg"), "--plan", plan.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("replay", &v);
    assert_eq!(v["valid"], true);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn worked_plan_fails_on_fig3_at_step_three() {
    let o = mcdmg(&["replay", &fixture("fig3.mcg")]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    conforms("replay", &v);
    assert_eq!(v["failed_step"], 3);
    assert_eq!(v["failed_rule"], "R2");

    let o = mcdmg(&["replay", &fixture("fig2b.mcg")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn dsep_reports_witness() {
    let o = mcdmg(&[
        "dsep",
        &fixture("fig3.mcg"),
        "--x",
        "CY",
        "--y",
        "R_CY",
        "--given",
        "CZ",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("dsep", &v);
    assert_eq!(v["separated"], false);
    assert_eq!(v["witness"], "CY <-> CZ <-> R_CY");

    let o = mcdmg(&[
        "dsep",
        &fixture("fig2b.mcg"),
        "--x",
        "CY",
        "--y",
        "CX",
        "--underline",
        "CX",
    ]);
    let v = json(&o);
    conforms("dsep", &v);
    assert_eq!(v["separated"], true);
    assert_eq!(v["graph"], "G[underline(CX)]");
}

#[test]
fn graph_commands_conform() {
    for f in [
        "fig1a.mcg",
        "fig1c.mcg",
        "fig2a.mcg",
        "fig2b.mcg",
        "fig3.mcg",
        "survey.mcg",
    ] {
        let o = mcdmg(&["parse", &fixture(f), "--format", "json"]);
        assert_eq!(o.status.code(), Some(0), "{f}");
        conforms("graph", &json(&o));
        let o = mcdmg(&["validate", &fixture(f)]);
        assert_eq!(o.status.code(), Some(0), "{f}");
        conforms("validate", &json(&o));
    }
    let o = mcdmg(&["parse", &fixture("fig2b.mcg"), "--format", "dot"]);
    assert!(stdout(&o).starts_with("digraph"));

    let o = mcdmg(&["abstract", &fixture("fig2a.mcg")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("class=cm-c-dmg"));
}

#[test]
fn compatibility_and_enumeration() {
    let clusters = fixture("fig1.clusters");
    let o = mcdmg(&[
        "compatible",
        &fixture("fig1c.mcg"),
        &fixture("fig1a.mcg"),
        "--clustering",
        &clusters,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("compatible", &v);
    assert_eq!(v["compatible"], true);

    let o = mcdmg(&[
        "compatible",
        &fixture("fig1c.mcg"),
        &fixture("survey.mcg"),
        "--clustering",
        &clusters,
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcdmg(&["enumerate", &fixture("fig1c.mcg"), "--limit", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("enumerate", &v);
    assert_eq!(v["count"], 5);
}

#[test]
fn oracle_outputs_conform() {
    let o = mcdmg(&["oracle", &fixture("fig2b.mcg"), "--graphs", "2", "--seeds", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    conforms("oracle", &v);
    assert!(v["max_abs_error"].as_f64().unwrap() <= 1e-9);

    let o = mcdmg(&[
        "oracle",
        &fixture("fig2b.mcg"),
        "--query",
        "effect:CX:CY",
        "--graphs",
        "2",
        "--seeds",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    conforms("oracle", &json(&o));

    let o = mcdmg(&["oracle", &fixture("fig3.mcg")]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    conforms("oracle", &v);
    assert!(v["witness"]["manifest_diff"].as_f64().unwrap() <= 1e-9);
    assert!(v["witness"]["joint_diff"].as_f64().unwrap() >= 1e-2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: [&[&str]; 4] = [
        &["check-joint", "fig2b.mcg"],
        &[
            "recover-effect",
            "fig3.mcg",
            "--treatment",
            "CX",
            "--outcome",
            "CY",
            "--format",
            "json",
        ],
        &["oracle", "fig2b.mcg", "--graphs", "2", "--seeds", "3"],
        &["simulate", "survey.mcg", "--rows", "50"],
    ];
    for args in runs {
        let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        a[1] = fixture(args[1]);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(mcdmg(&a).stdout, mcdmg(&a).stdout, "{args:?}");
    }
}

#[test]
fn seed_comes_from_environment() {
    let f = fixture("survey.mcg");
    let with_env = Command::new(env!("CARGO_BIN_EXE_mcdmg"))
        .args(["simulate", &f, "--rows", "40"])
        .env("MCDMG_SEED", "7")
        .output()
        .unwrap();
    let explicit = mcdmg(&["simulate", &f, "--rows", "40", "--seed", "7"]);
    let default = mcdmg(&["simulate", &f, "--rows", "40"]);
    assert_eq!(with_env.stdout, explicit.stdout);
    assert_ne!(with_env.stdout, default.stdout);
}

#[test]
fn simulated_data_has_missing_cells() {
    let o = mcdmg(&["simulate", &fixture("survey.mcg"), "--rows", "200", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("Z,X,Y"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().any(|r| r.ends_with(",NA")));
    assert!(rows.iter().all(|r| !r.starts_with("NA")));

    let o = mcdmg(&["simulate", &fixture("fig2b.mcg"), "--rows", "200", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("X1,X2,Y1,Y2,Z1,Z2\n"));
    assert!(text.contains("NA"));
}

#[test]
fn input_errors_exit_two() {
    let o = mcdmg(&["check-joint", "/nonexistent/graph.mcg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = mcdmg(&[
        "recover-effect",
        &fixture("fig3.mcg"),
        "--treatment",
        "CQ",
        "--outcome",
        "CY",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcdmg(&["oracle", &fixture("fig3.mcg"), "--query", "marginal"]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcdmg(&["check-joint", &fixture("fig1c.mcg")]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcdmg(&["check-joint", &fixture("fig2b.mcg"), "--format", "dot"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_subcommand_help_has_an_example() {
    for sub in [
        "parse",
        "validate",
        "dsep",
        "abstract",
        "compatible",
        "enumerate",
        "check-joint",
        "recover-effect",
        "replay",
        "oracle",
        "simulate",
    ] {
        let o = mcdmg(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        let text = stdout(&o);
        assert!(text.contains("Example"), "{sub}");
        assert!(text.contains(&format!("mcdmg {sub} ")), "{sub}");
    }
}
