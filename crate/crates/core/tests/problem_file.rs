mod common;

use poschoice::{build_scenario, export_problem, list_scenarios, parse_problem, Error, ProblemKind, SolveConfig};

const STAIRCASE: &str = include_str!("data/staircase.toml");

#[test]
fn staircase_matches_brute_force() {
    let kind = parse_problem(STAIRCASE).unwrap();
    let ProblemKind::Box(p) = &kind else { panic!("expected a box problem") };
    let cfg = SolveConfig::default();
    for i in 0..=60 {
        let x = 3.0 * i as f64 / 60.0;
        let v = kind.solve(&[x], &cfg).unwrap().value;
        let bf = common::brute_1d(p, x, 3001);
        assert!((v - bf).abs() <= 1e-9, "x={x}: {v} vs {bf}");
    }
    // the spike is worth reaching from its neighbourhood
    let s = kind.solve(&[0.4], &cfg).unwrap();
    assert_eq!(s.argmax_set, vec![vec![0.5]]);
    assert!((s.value - (0.8 - 0.15)).abs() < 1e-12);
}

#[test]
fn every_scenario_round_trips_through_text() {
    for info in list_scenarios() {
        let s = build_scenario(&info.name, &Default::default()).unwrap();
        let text = export_problem(&s.problem).unwrap();
        let back = parse_problem(&text).unwrap();
        assert_eq!(export_problem(&back).unwrap(), text, "{}", info.name);
        let cfg = SolveConfig::for_dim(s.dim());
        for x in s.sample_anchors(5, 3) {
            let a = s.problem.solve(&x, &cfg).unwrap();
            let b = back.solve(&x, &cfg).unwrap();
            assert_eq!(a.value, b.value, "{} at {x:?}", info.name);
        }
    }
}

#[test]
fn errors_cite_the_line() {
    let broken = STAIRCASE.replace("alpha = 1.5", "alpha = -1.0");
    let err = parse_problem(&broken).unwrap_err();
    assert!(matches!(err, Error::Parse(_) | Error::Parameter { .. } | Error::Input(_)), "{err:?}");
    assert!(err.to_string().contains("line"), "{err}");

    let overlap = STAIRCASE.replacen("lo = [1.0]", "lo = [0.5]", 1);
    let err = parse_problem(&overlap).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");

    let err = parse_problem("kind = \"torus\"").unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
}
