use std::collections::BTreeMap;

use poschoice::{
    build_scenario, ring_distance, solve, upper_dini, DiniClass, DiniSchedule, Problem, ProblemKind, Scenario,
    SolveConfig,
};
use proptest::prelude::*;

fn scenario(name: &str) -> Scenario {
    build_scenario(name, &BTreeMap::new()).unwrap()
}

fn boxed(name: &str) -> Problem {
    match scenario(name).problem {
        ProblemKind::Box(p) => p,
        ProblemKind::PlaneBound(pb) => pb.plane_problem().clone(),
        ProblemKind::Ring(_) => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_metric_axioms(x in 0.0..2.0f64, y in 0.0..2.0f64, z in 0.0..2.0f64) {
        let d = |a, b| ring_distance(a, b).unwrap();
        prop_assert_eq!(d(x, x), 0.0);
        prop_assert!(d(x, y) >= 0.0 && d(x, y) <= 1.0);
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    }
}

proptest! {
    #[test]
    fn regularization_is_idempotent(y0 in 0.0..2.0f64, y1 in 0.0..2.0f64, pick in 0usize..3) {
        let p = boxed(["step1d", "spike", "indicator2d"][pick]);
        let y: Vec<f64> = if p.dim() == 1 { vec![y0] } else { vec![y0, y1] };
        let reg = p.regularized();
        prop_assert_eq!(reg.reapply(&y), reg.eval(&y));
    }

    #[test]
    fn regularization_is_idempotent_at_breakpoints(pick in 0usize..2) {
        let p = boxed(["step1d", "spike"][pick]);
        let reg = p.regularized();
        for y in [0.0, 0.5, 1.0, 2.0] {
            prop_assert_eq!(reg.reapply(&[y]), reg.eval(&[y]));
        }
    }

    #[test]
    fn objective_is_bounded(x0 in 0.0..2.0f64, x1 in 0.0..2.0f64, y0 in 0.0..2.0f64, y1 in 0.0..2.0f64, pick in 0usize..3) {
        let p = boxed(["step1d", "spike", "indicator2d"][pick]);
        let (x, y) = if p.dim() == 1 { (vec![x0], vec![y0]) } else { (vec![x0, x1], vec![y0, y1]) };
        let h = p.evaluate_objective(&x, &y).unwrap();
        prop_assert!(h.abs() <= p.objective_bound() + 1e-12);
    }

    #[test]
    fn value_is_lipschitz_in_the_anchor(a in 0.0..2.0f64, b in 0.0..2.0f64, pick in 0usize..2) {
        let p = boxed(["step1d", "spike"][pick]);
        let lip = p.cost().lipschitz_in_anchor(p.domain());
        let cfg = SolveConfig::default();
        let va = solve(&p, &[a], &cfg).unwrap().value;
        let vb = solve(&p, &[b], &cfg).unwrap().value;
        prop_assert!((va - vb).abs() <= lip * (a - b).abs() + 1e-9);
    }

    #[test]
    fn ring_value_is_lipschitz(a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let s = scenario("ring");
        let cfg = SolveConfig::default();
        let va = s.problem.solve(&[a], &cfg).unwrap().value;
        let vb = s.problem.solve(&[b], &cfg).unwrap().value;
        prop_assert!((va - vb).abs() <= ring_distance(a, b).unwrap() + 1e-9);
    }

    #[test]
    fn refinement_never_lowers_the_value(x in 0.0..3.0f64, depth in 0usize..12) {
        // coarse seeds so the pattern search does the work
        let p = boxed("plane_bound");
        let cfg = |refine_depth| SolveConfig { grid_per_axis: 7, refine_depth, ..SolveConfig::default() };
        let lo = solve(&p, &[x], &cfg(depth)).unwrap().value;
        let hi = solve(&p, &[x], &cfg(depth + 1)).unwrap().value;
        prop_assert!(hi >= lo - 1e-12, "depth {depth}: {lo} -> {hi}");
    }

    #[test]
    fn dini_matches_the_gradient_on_smooth_objectives(x in 0.0..3.0f64, y in -1.5..6.5f64, sign in prop::bool::ANY) {
        // h(y) = y - (y - x)^2
        let p = boxed("plane_bound");
        let v = if sign { 1.0 } else { -1.0 };
        let grad = 1.0 - 2.0 * (y - x);
        let est = upper_dini(&p, &[x], &[y], &[v], &DiniSchedule::default()).unwrap();
        match est.classification {
            DiniClass::Finite(d) => prop_assert!((d - grad * v).abs() <= 1e-4, "{d} vs {}", grad * v),
            other => prop_assert!(false, "expected a finite estimate, got {other:?}"),
        }
    }
}
