//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use poschoice::dini::{differential_interval, DifferentialKind};
use poschoice::envelope::DirectionalSchedule;
use poschoice::report::fonc_sweep;
use poschoice::{
    build_scenario, classify_kinks, directional_derivative, fonc_check, integral_reconstruct,
    lipschitz_estimate, monotonicity_check, plane_bound_solve, solve, value_function, AffineExpr,
    BoxDomain, CostCurve, CostSpec, Piece, PiecewisePayoff, Problem, ProblemKind, Region, Scenario,
    SolveConfig,
};

type Outcome = Result<String, String>;

fn scenario(name: &str, params: &[(&str, f64)]) -> Scenario {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_scenario(name, &p).expect("registry scenario")
}

fn step(alpha: f64) -> Scenario {
    scenario("step1d", &[("alpha", alpha)])
}

fn all_scenarios() -> Vec<(String, Scenario)> {
    vec![
        ("step1d(1.5)".into(), step(1.5)),
        ("step1d(2)".into(), step(2.0)),
        ("step1d(4)".into(), step(4.0)),
        ("indicator2d(2)".into(), scenario("indicator2d", &[("alpha", 2.0)])),
        ("spike".into(), scenario("spike", &[])),
        ("ring".into(), scenario("ring", &[])),
        ("plane_bound(1,2)".into(), scenario("plane_bound", &[("c", 1.0), ("p", 2.0)])),
    ]
}

fn box_problem(s: &Scenario) -> &Problem {
    s.problem.box_problem().expect("box-backed scenario")
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn golden_values() -> Outcome {
    let cases = [
        ("step1d(1.5)", step(1.5)),
        ("step1d(2)", step(2.0)),
        ("step1d(4)", step(4.0)),
        ("spike", scenario("spike", &[])),
        ("ring", scenario("ring", &[])),
    ];
    let mut notes = Vec::new();
    let mut failed = Vec::new();
    for (label, s) in &cases {
        let cfg = SolveConfig::for_dim(s.dim());
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for x in s.sample_anchors(200, 11) {
            let v = s.problem.solve(&x, &cfg).map_err(|e| e.to_string())?.value;
            worst = worst.max((v - s.value_oracle(&x)).abs());
        }
        let took = start.elapsed();
        notes.push(format!("{label} err={worst:.2e} t={:.2}s", took.as_secs_f64()));
        if worst > 1e-4 || took >= Duration::from_secs(5) {
            failed.push(*label);
        }
    }
    let line = notes.join(", ");
    if failed.is_empty() {
        Ok(line)
    } else {
        Err(format!("{line}; failing: {failed:?}"))
    }
}

fn kinks_step() -> Outcome {
    let s = step(2.0);
    let p = box_problem(&s);
    let grid = value_function(p, 4096, &SolveConfig::for_dim(1)).map_err(|e| e.to_string())?;
    let h = grid.spacing(0);
    let report = classify_kinks(&grid, None).map_err(|e| e.to_string())?;
    let targets = [0.5, 1.0];
    let pts: Vec<f64> = report.flagged_points().map(|p| p[0]).collect();
    let stray: Vec<f64> = pts
        .iter()
        .copied()
        .filter(|x| targets.iter().all(|t| (x - t).abs() > h + 1e-12))
        .collect();
    let found = targets
        .iter()
        .all(|t| pts.iter().any(|x| (x - t).abs() <= h + 1e-12));

    let at = |t: f64| differential_interval(&grid, grid.nearest(&[t]), None);
    let sub = at(0.5).map_err(|e| e.to_string())?;
    let sup = at(1.0).map_err(|e| e.to_string())?;
    let close = |iv: &poschoice::dini::DifferentialInterval, lo: f64, hi: f64| {
        (iv.lo - lo).abs() <= 0.05 && (iv.hi - hi).abs() <= 0.05
    };
    let ok_sub = sub.kind == DifferentialKind::Sub && close(&sub, 0.0, 2.0);
    let ok_sup = sup.kind == DifferentialKind::Super && close(&sup, 1.0, 2.0);
    let line = format!(
        "flagged={pts:?} stray={} sub@0.5={:?}[{:.4},{:.4}] super@1={:?}[{:.4},{:.4}]",
        stray.len(),
        sub.kind,
        sub.lo,
        sub.hi,
        sup.kind,
        sup.lo,
        sup.hi
    );
    if stray.is_empty() && found && ok_sub && ok_sup {
        Ok(line)
    } else {
        Err(line)
    }
}

fn fonc() -> Outcome {
    let mut checked = 0;
    let mut passed = 0;
    let mut per = Vec::new();
    for (label, s) in all_scenarios() {
        let cfg = SolveConfig::for_dim(s.dim());
        let anchors = s.sample_anchors(50, 23);
        let (c, p) = fonc_sweep(&s.problem, &anchors, &cfg).map_err(|e| e.to_string())?;
        per.push(format!("{label} {p}/{c}"));
        checked += c;
        passed += p;
    }
    // control: y = 0.9 is not a maximizer for x = 0.75 on step1d(2)
    let s = step(2.0);
    let control = fonc_check(box_problem(&s), &[0.75], &[0.9], None).map_err(|e| e.to_string())?;
    let worst = control.worst_value.unwrap_or(f64::NAN);
    let line = format!(
        "interior maximizers {passed}/{checked} ({}); control passes={} worst={worst:.6}",
        per.join(", "),
        control.passes
    );
    if checked > 0 && passed == checked && !control.passes && worst >= 1.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn kink_refinement() -> Outcome {
    let s = scenario("indicator2d", &[("alpha", 2.0)]);
    let p = box_problem(&s);
    let cfg = SolveConfig::for_dim(2);
    let start = Instant::now();
    let mut frac = Vec::new();
    for cells in [256, 512] {
        let grid = value_function(p, cells, &cfg).map_err(|e| e.to_string())?;
        frac.push(classify_kinks(&grid, None).map_err(|e| e.to_string())?.fraction);
    }
    let took = start.elapsed();
    let ratio = frac[0] / frac[1];
    let line = format!(
        "fraction 256^2={:.5} 512^2={:.5} ratio={ratio:.3} t={:.1}s",
        frac[0],
        frac[1],
        took.as_secs_f64()
    );
    if ratio >= 1.5 && frac[1] < 0.05 && took < Duration::from_secs(120) {
        Ok(line)
    } else {
        Err(line)
    }
}

fn derivative_bounds() -> Outcome {
    use rand::{Rng, SeedableRng};
    let alpha = 2.0;
    let sched = DirectionalSchedule::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, s, cells) in [
        ("step1d", step(alpha), 1024),
        ("indicator2d", scenario("indicator2d", &[("alpha", alpha)]), 128),
    ] {
        let p = box_problem(&s);
        let cfg = SolveConfig::for_dim(s.dim());
        let d = p.domain().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xacce);
        let mut sample = || -> Vec<f64> {
            (0..d.dim()).map(|i| rng.gen_range(d.lo()[i]..=d.hi()[i])).collect()
        };

        let mut bound_excess = f64::NEG_INFINITY;
        for _ in 0..200 {
            let (x, y) = (sample(), sample());
            let dir: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let dv = directional_derivative(p, &x, &dir, &sched, &cfg).map_err(|e| e.to_string())?;
            bound_excess = bound_excess.max(dv.abs() - alpha * dist(&x, &y));
        }

        // pairs (x, y*) with y* a maximizer away from x: V'(x; y* - x) = alpha |y* - x|
        let mut eq_err: f64 = 0.0;
        let mut pairs = 0;
        let mut tries = 0;
        while pairs < 20 && tries < 10_000 {
            tries += 1;
            let x = sample();
            let sol = solve(p, &x, &cfg).map_err(|e| e.to_string())?;
            if sol.value <= 1e-6 {
                continue;
            }
            let Some(y) = sol.argmax_set.iter().find(|y| dist(y, &x) > 1e-3) else {
                continue;
            };
            let dir: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let dv = directional_derivative(p, &x, &dir, &sched, &cfg).map_err(|e| e.to_string())?;
            eq_err = eq_err.max((dv - alpha * dist(&x, y)).abs());
            pairs += 1;
        }

        let grid = value_function(p, cells, &cfg).map_err(|e| e.to_string())?;
        let lip = lipschitz_estimate(&grid);
        let pass = bound_excess <= 1e-3 && pairs == 20 && eq_err <= 1e-3 && lip <= alpha + 1e-6;
        ok &= pass;
        notes.push(format!(
            "{label}: bound excess={bound_excess:.2e} equality err={eq_err:.2e} over {pairs} pairs lipschitz={lip:.6}"
        ));
    }
    let line = notes.join("; ");
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn reconstruction() -> Outcome {
    let s = step(2.0);
    let p = box_problem(&s);
    let cfg = SolveConfig::for_dim(1);
    let mut err = Vec::new();
    let mut h = Vec::new();
    for cells in [4096, 8192] {
        let grid = value_function(p, cells, &cfg).map_err(|e| e.to_string())?;
        h.push(grid.spacing(0));
        err.push(integral_reconstruct(&grid).map_err(|e| e.to_string())?.sup_error);
    }
    let ratio = err[0] / err[1];
    let line = format!(
        "sup_error@4096={:.3e} ({:.3}h) sup_error@8192={:.3e} ratio={ratio:.3}",
        err[0],
        err[0] / h[0],
        err[1]
    );
    if err[0] <= 5.0 * h[0] && ratio >= 1.8 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn one_sided_problem(payoff: Vec<Piece>, slope: f64) -> Problem {
    let domain = BoxDomain::cube(1, 0.0, 2.0).unwrap();
    let f = PiecewisePayoff::new(&domain, payoff, vec![], None).unwrap();
    let cost = CostSpec::Separable { curves: vec![CostCurve::Hinge { slope }] };
    Problem::new(f, cost, domain).unwrap()
}

fn monotone() -> Outcome {
    // V = 1 everywhere: moving left is free and f = 1 on [0, 1)
    let flat = one_sided_problem(
        vec![
            Piece::new(Region::interval(0.0, true, 1.0, false), AffineExpr::constant(1.0)),
            Piece::new(Region::interval(1.0, true, 2.0, true), AffineExpr::constant(0.5)),
        ],
        1.0,
    );
    // step payoff with a hinge cost
    let stepped = one_sided_problem(
        vec![
            Piece::new(Region::interval(0.0, true, 1.0, false), AffineExpr::constant(0.0)),
            Piece::new(Region::interval(1.0, true, 2.0, true), AffineExpr::new(0.0, vec![1.0])),
        ],
        2.0,
    );
    let cfg = SolveConfig::for_dim(1);
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, p) in [("v_equals_one", &flat), ("step_hinge", &stepped)] {
        let grid = value_function(p, 1024, &cfg).map_err(|e| e.to_string())?;
        let m = monotonicity_check(p, &grid, 1e-9).map_err(|e| e.to_string())?;
        ok &= m.monotone && m.violations == 0;
        notes.push(format!("{label}: violations={} worst={:.2e}", m.violations, m.worst_violation));
    }
    let mut bf_err: f64 = 0.0;
    let mut one_err: f64 = 0.0;
    for i in 0..=100 {
        let x = 2.0 * i as f64 / 100.0;
        let v = solve(&flat, &[x], &cfg).map_err(|e| e.to_string())?.value;
        bf_err = bf_err.max((v - common::brute_1d(&flat, x, 10_001)).abs());
        one_err = one_err.max((v - 1.0).abs());
    }
    ok &= bf_err <= 1e-6 && one_err <= 1e-6;
    notes.push(format!("V=1 example: |V-brute|={bf_err:.2e} |V-1|={one_err:.2e}"));
    let line = notes.join("; ");
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn plane_bound() -> Outcome {
    let s = scenario("plane_bound", &[("c", 1.0), ("p", 2.0)]);
    let ProblemKind::PlaneBound(pb) = &s.problem else {
        return Err("plane_bound scenario has the wrong kind".into());
    };
    let report = plane_bound_solve(pb, 300, &SolveConfig::for_dim(1)).map_err(|e| e.to_string())?;
    let value_err = (0..report.plane_grid.len())
        .map(|k| {
            let x = report.plane_grid.coord(k)[0];
            (report.plane_grid.value(k) - (x + 0.25)).abs()
        })
        .fold(0.0, f64::max);
    let line = format!(
        "|V-(x+1/4)|={value_err:.2e} gradient err={:.2e} dominance worst gap={:.2e} violations={} Z(x) violations={}/{}",
        report.gradient.max_error,
        report.dominance.worst_gap,
        report.dominance.violations,
        report.membership.violations,
        report.membership.maximizers_checked
    );
    if value_err <= 1e-4
        && report.gradient.max_error <= 1e-3
        && report.dominance.worst_gap <= 1e-9
        && report.dominance.violations == 0
        && report.membership.violations == 0
        && report.membership.maximizers_checked > 0
    {
        Ok(line)
    } else {
        Err(line)
    }
}

fn brute_force_1d() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, s) in all_scenarios().into_iter().filter(|(_, s)| s.dim() == 1) {
        let cfg = SolveConfig::for_dim(1);
        let mut worst: f64 = 0.0;
        for x in s.sample_anchors(100, 31) {
            let v = s.problem.solve(&x, &cfg).map_err(|e| e.to_string())?.value;
            worst = worst.max((v - common::brute_kind_1d(&s.problem, x[0], 10_001)).abs());
        }
        ok &= worst <= 1e-6;
        notes.push(format!("{label} {worst:.2e}"));
    }
    let line = notes.join(", ");
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden value functions", golden_values),
        ("step1d kinks and differentials", kinks_step),
        ("first-order condition at maximizers", fonc),
        ("indicator2d kink refinement", kink_refinement),
        ("directional derivative bounds", derivative_bounds),
        ("integral reconstruction", reconstruction),
        ("one-sided cost monotonicity", monotone),
        ("plane bound", plane_bound),
        ("1-D brute force agreement", brute_force_1d),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
