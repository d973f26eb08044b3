use mcdmg_core::abstraction::{infer_clustering, is_compatible, pi};
use mcdmg_core::graph::promote_trivial;
use mcdmg_core::graph::random::{random_graph, RandomSpec};
use mcdmg_core::joint::{check_joint, construct_witness, find_violations, Reason};
use mcdmg_core::oracle::{check_joint_formula, OracleConfig};
use mcdmg_core::{fixtures, parse_graph, Error, Parallelism};

#[test]
fn golden_verdicts() {
    let b = parse_graph(fixtures::FIG2B).unwrap();
    let v = check_joint(&b).unwrap();
    assert!(v.recoverable && v.violations.is_empty());
    let latex = v.latex().unwrap();
    assert!(latex.starts_with("\\frac{"), "{latex}");

    let a = parse_graph(fixtures::FIG2A).unwrap();
    assert_eq!(
        check_joint(&a).unwrap().recoverable,
        check_joint(&pi(&a).unwrap()).unwrap().recoverable
    );

    let f3 = check_joint(&parse_graph(fixtures::FIG3).unwrap()).unwrap();
    assert!(!f3.recoverable && f3.formula.is_none());
    assert_eq!(f3.violations[0].reason, Reason::ColliderPath);
    assert_eq!(f3.violations[0].path.render(), "CY <-> CZ <-> R_CY");
}

#[test]
fn non_missingness_graphs_are_refused() {
    let c = parse_graph(fixtures::FIG1C).unwrap();
    assert!(matches!(check_joint(&c), Err(Error::WrongGraphClass { .. })));
}

#[test]
fn witness_is_compatible_and_violating() {
    let g = parse_graph(fixtures::FIG3).unwrap();
    let v = check_joint(&g).unwrap();
    let m = construct_witness(&g, &v.violations[0]).unwrap();
    let c = infer_clustering(&g, &m).unwrap();
    assert!(is_compatible(&m, &g, &c).unwrap().compatible);
    assert!(!find_violations(&m, Parallelism::Sequential).unwrap().is_empty());
}

#[test]
fn recoverable_random_graphs_have_exact_formulas() {
    let mut spec = RandomSpec::new(3);
    spec.indicators = 0.7;
    spec.directed = 0.4;
    let cfg = OracleConfig {
        graphs: 1,
        models: 3,
        max_vars_per_cluster: 1,
        ..Default::default()
    };
    let mut checked = 0;
    for seed in 0..150 {
        let g = random_graph(&spec, seed);
        if g.indicators().is_empty() {
            continue;
        }
        let m = promote_trivial(&g).unwrap();
        let Ok(v) = check_joint(&m) else { continue };
        if let Some(f) = &v.formula {
            let r = check_joint_formula(&m, f, &cfg).unwrap();
            assert!(r.passed(), "seed {seed}: {:?}", r.failures);
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} recoverable graphs");
}
