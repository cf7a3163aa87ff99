//! Machine-readable reports with deterministic float formatting, and the
//! analysis suite behind them.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::dini::{default_net_for, fonc_check_objective, Anchored, ChoiceObjective, DiniSchedule, DEFAULT_FONC_TOL};
use crate::domain::euclidean;
use crate::envelope::{
    classify_kinks, directional_derivative, directional_derivative_with, lipschitz_estimate, monotonicity_check,
    DirectionalSchedule, KinkReport, MIN_KINK_RESOLUTION,
};
use crate::error::{Error, Result};
use crate::grid::{fmt_num, GridMeta, ValueGrid};
use crate::manifold::{ring_regularize_and_solve, RingAnchored};
use crate::plane_bound::plane_bound_solve;
use crate::scenarios::{ProblemKind, Scenario};
use crate::solver::{Solution, SolveConfig};

pub const TOOL: &str = "poschoice";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to 12 significant digits so that serialized output is stable.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with fields in declaration order and floats at 12 significant digits.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut value = serde_json::to_value(v)?;
    round_value(&mut value);
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured < tolerance,
            measured,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub scenario: String,
    pub grid: GridMeta,
    /// `None` below the kink-classification resolution.
    pub kink_fraction: Option<f64>,
    pub kink_tol: Option<f64>,
    pub kink_count: Option<usize>,
    /// Flagged node coordinates, listed for one-dimensional grids only.
    pub kinks: Option<Vec<f64>>,
    pub lipschitz: f64,
    pub regularity_violated: bool,
    pub checks: Vec<Check>,
}

pub struct Analysis {
    pub grid: ValueGrid,
    pub kinks: Option<KinkReport>,
    pub report: AnalysisReport,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub cells: usize,
    pub solve: SolveConfig,
    /// Anchors sampled for the first-order-condition sweep.
    pub fonc_anchors: usize,
    /// Anchor pairs sampled for the directional-derivative bound.
    pub derivative_pairs: usize,
    pub seed: u64,
}

impl AnalysisOptions {
    pub fn new(cells: usize, dim: usize) -> Self {
        AnalysisOptions {
            cells,
            solve: SolveConfig::for_dim(dim),
            fonc_anchors: 20,
            derivative_pairs: 10,
            seed: 0x5eed,
        }
    }
}

/// Lipschitz constant of `V` implied by the cost.
fn lipschitz_bound(problem: &ProblemKind) -> f64 {
    match problem {
        ProblemKind::Box(p) => p.cost().lipschitz_in_anchor(p.domain()),
        ProblemKind::Ring(r) => r.scale(),
        ProblemKind::PlaneBound(pb) => pb.plane().gradient(pb.dim()).iter().map(|c| c * c).sum::<f64>().sqrt(),
    }
}

fn sample_box(d: &crate::domain::BoxDomain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d.dim()).map(|i| rng.gen_range(d.lo()[i]..d.hi()[i])).collect()
}

/// FONC over the interior maximizers at `anchors`: `(checked, passed)`.
pub fn fonc_sweep(problem: &ProblemKind, anchors: &[Vec<f64>], cfg: &SolveConfig) -> Result<(usize, usize)> {
    let net = default_net_for(problem.dim());
    let sched = DiniSchedule::default();
    let (mut checked, mut passed) = (0, 0);
    for x in anchors {
        let sol = problem.solve(x, cfg)?;
        for y in &sol.argmax_set {
            let report = match problem {
                ProblemKind::Ring(r) => {
                    let obj = RingAnchored { problem: r, anchor: x[0] };
                    fonc_check_objective(&obj, y, &net, DEFAULT_FONC_TOL, &sched)?
                }
                _ => {
                    let p = problem.box_problem().expect("box-backed problem");
                    let obj = Anchored { problem: p, anchor: x };
                    if !obj.is_interior(y) {
                        continue;
                    }
                    fonc_check_objective(&obj, y, &net, DEFAULT_FONC_TOL, &sched)?
                }
            };
            checked += 1;
            passed += usize::from(report.passes);
        }
    }
    Ok((checked, passed))
}

/// `max (|V'(x; y - x)| - L |y - x|)` over random anchor pairs.
fn derivative_excess(problem: &ProblemKind, lip: f64, opts: &AnalysisOptions) -> Result<f64> {
    let d = problem.anchor_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xd1);
    let sched = DirectionalSchedule::default();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.derivative_pairs {
        let x = sample_box(&d, &mut rng);
        let y = sample_box(&d, &mut rng);
        let dir: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let deriv = match problem {
            ProblemKind::Ring(r) => directional_derivative_with(
                |p| ring_regularize_and_solve(r, r.domain().wrap(p[0]), &opts.solve).map(|s| s.value),
                |_| true,
                &x,
                &dir,
                &sched,
            )?,
            ProblemKind::Box(p) => directional_derivative(p, &x, &dir, &sched, &opts.solve)?,
            ProblemKind::PlaneBound(pb) => directional_derivative(pb.plane_problem(), &x, &dir, &sched, &opts.solve)?,
        };
        worst = worst.max(deriv.abs() - lip * euclidean(&x, &y));
    }
    Ok(worst)
}

/// Builds the value grid and runs the envelope checks that apply to the problem.
pub fn analyze(
    label: &str,
    problem: &ProblemKind,
    scenario: Option<&Scenario>,
    config: Value,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    let mut checks = Vec::new();
    let grid = match problem {
        ProblemKind::PlaneBound(pb) => {
            let r = plane_bound_solve(pb, opts.cells, &opts.solve)?;
            checks.push(Check::at_most("plane_gradient", r.gradient.max_error, 1e-3));
            checks.push(Check::at_most("bound_dominated_by_plane", r.dominance.worst_gap, r.dominance.v_tol));
            checks.push(Check::at_most(
                "bound_maximizers_in_z",
                -r.membership.worst_slack,
                opts.solve.v_tol,
            ));
            r.plane_grid
        }
        _ => problem.value_grid(opts.cells, &opts.solve)?,
    };

    let lipschitz = lipschitz_estimate(&grid);
    let lip_bound = lipschitz_bound(problem);
    checks.insert(0, Check::at_most("lipschitz_bound", lipschitz, lip_bound + 1e-6));

    if let Some(s) = scenario {
        let tol = if s.name == "indicator2d" { 1e-3 } else { 1e-4 };
        let mut err = (0..grid.len())
            .map(|k| (grid.value(k) - s.value_oracle(&grid.coord(k))).abs())
            .fold(0.0, f64::max);
        for e in grid.extra_nodes() {
            err = err.max((e.value - s.value_oracle(&e.point)).abs());
        }
        checks.push(Check::at_most("golden_value", err, tol));
    }

    let kinks = if grid.nodes_per_axis() >= MIN_KINK_RESOLUTION {
        let k = classify_kinks(&grid, None)?;
        checks.push(Check::below("kink_fraction", k.fraction, 0.05));
        Some(k)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d = problem.anchor_domain();
    let anchors: Vec<Vec<f64>> = (0..opts.fonc_anchors).map(|_| sample_box(&d, &mut rng)).collect();
    let (checked, passed) = fonc_sweep(problem, &anchors, &opts.solve)?;
    let rate = if checked == 0 { 1.0 } else { passed as f64 / checked as f64 };
    checks.push(Check {
        name: "fonc_interior_maximizers".into(),
        pass: passed == checked,
        measured: rate,
        tolerance: 1.0,
    });

    if opts.derivative_pairs > 0 {
        let excess = derivative_excess(problem, lip_bound, opts)?;
        checks.push(Check::at_most("directional_derivative_bound", excess, 1e-3));
    }

    if let ProblemKind::Box(p) = problem {
        if p.cost().is_one_sided_separable() {
            let m = monotonicity_check(p, &grid, opts.solve.v_tol)?;
            checks.push(Check::at_most("monotone", m.worst_violation, m.v_tol));
        }
    }

    let report = AnalysisReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        config,
        scenario: label.into(),
        grid: grid.meta(),
        kink_fraction: kinks.as_ref().map(|k| k.fraction),
        kink_tol: kinks.as_ref().map(|k| k.kink_tol),
        kink_count: kinks.as_ref().map(|k| k.flagged_nodes.len()),
        kinks: kinks
            .as_ref()
            .filter(|_| grid.dim() == 1)
            .map(|k| k.flagged_points().map(|p| p[0]).collect()),
        lipschitz,
        regularity_violated: problem.regularity_violated(),
        checks,
    };
    Ok(Analysis { grid, kinks, report })
}

/// `x_1..x_n, V, dV_1..dV_n, kink` rows. Derivatives are central differences
/// inside the grid and one-sided on its boundary.
pub fn write_plot_csv<W: Write>(grid: &ValueGrid, kinks: Option<&KinkReport>, w: W) -> Result<()> {
    let n = grid.dim();
    let flagged: std::collections::HashSet<usize> =
        kinks.map(|k| k.flagged_nodes.iter().copied().collect()).unwrap_or_default();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    header.push("V".into());
    header.extend((1..=n).map(|i| format!("dV_{i}")));
    header.push("kink".into());
    out.write_record(&header)?;
    for k in 0..grid.len() {
        let mut row: Vec<String> = grid.coord(k).iter().map(|v| fmt_num(*v)).collect();
        row.push(fmt_num(grid.value(k)));
        for axis in 0..n {
            let h = grid.spacing(axis);
            let l = grid.neighbor(k, axis, -1);
            let r = grid.neighbor(k, axis, 1);
            let d = match (l, r) {
                (Some(l), Some(r)) => (grid.value(r) - grid.value(l)) / (2.0 * h),
                (None, Some(r)) => (grid.value(r) - grid.value(k)) / h,
                (Some(l), None) => (grid.value(k) - grid.value(l)) / h,
                (None, None) => return Err(Error::input("grid axis has a single node")),
            };
            row.push(fmt_num(d));
        }
        row.push(if flagged.contains(&k) { "1" } else { "0" }.into());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One solved anchor with its first-order-condition outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveEntry {
    pub anchor: Vec<f64>,
    pub value: f64,
    pub argmax_set: Vec<Vec<f64>>,
    pub attained_at_discontinuity: Vec<bool>,
    /// Per maximizer; `None` on the domain boundary where the condition does not apply.
    pub fonc_pass: Vec<Option<bool>>,
    /// Ring maximizer continua as `[lo, hi]` arcs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
}

pub fn solve_entry(problem: &ProblemKind, x: &[f64], cfg: &SolveConfig) -> Result<SolveEntry> {
    let net = default_net_for(problem.dim());
    let sched = DiniSchedule::default();
    let (sol, intervals): (Solution, _) = match problem {
        ProblemKind::Ring(r) => {
            if x.len() != 1 {
                return Err(Error::input("ring anchors have one coordinate"));
            }
            let s = ring_regularize_and_solve(r, x[0], cfg)?;
            let iv = s.intervals.iter().map(|i| [i.lo, i.hi]).collect();
            (s.into_solution(), Some(iv))
        }
        _ => (problem.solve(x, cfg)?, None),
    };
    let fonc_pass = sol
        .argmax_set
        .iter()
        .map(|y| -> Result<Option<bool>> {
            match problem {
                ProblemKind::Ring(r) => {
                    let obj = RingAnchored { problem: r, anchor: x[0] };
                    Ok(Some(fonc_check_objective(&obj, y, &net, DEFAULT_FONC_TOL, &sched)?.passes))
                }
                _ => {
                    let p = problem.box_problem().expect("box-backed problem");
                    let obj = Anchored { problem: p, anchor: x };
                    if !obj.is_interior(y) {
                        return Ok(None);
                    }
                    Ok(Some(fonc_check_objective(&obj, y, &net, DEFAULT_FONC_TOL, &sched)?.passes))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(SolveEntry {
        anchor: sol.anchor,
        value: sol.value,
        argmax_set: sol.argmax_set,
        attained_at_discontinuity: sol.attained_at_discontinuity,
        fonc_pass,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::build;
    use std::collections::BTreeMap;

    #[test]
    fn json_is_rounded_and_ordered() {
        #[derive(Serialize)]
        struct T {
            z: f64,
            a: Vec<f64>,
        }
        let s = to_json(&T {
            z: 0.1 + 0.2,
            a: vec![1.0 / 3.0],
        })
        .unwrap();
        assert_eq!(s, "{\n  \"z\": 0.3,\n  \"a\": [\n    0.333333333333\n  ]\n}\n");
    }

    #[test]
    fn step_analysis_passes_its_checks() {
        let s = build("step1d", &BTreeMap::new()).unwrap();
        let opts = AnalysisOptions::new(512, 1);
        let a = analyze("step1d", &s.problem, Some(&s), Value::Null, &opts).unwrap();
        for c in &a.report.checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(a.report.kinks.as_deref(), Some(&[0.5, 1.0][..]));
        let mut buf = Vec::new();
        write_plot_csv(&a.grid, a.kinks.as_ref(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_1,V,dV_1,kink\n0,0,0,0\n"));
        assert!(text.contains("\n0.5,0,1,1\n"));
    }

    #[test]
    fn solve_entries() {
        let s = build("step1d", &BTreeMap::new()).unwrap();
        let e = solve_entry(&s.problem, &[0.75], &SolveConfig::default()).unwrap();
        assert_eq!(e.argmax_set, vec![vec![1.0]]);
        assert_eq!(e.fonc_pass, vec![Some(true)]);
        let r = build("ring", &BTreeMap::new()).unwrap();
        let e = solve_entry(&r.problem, &[1.5], &SolveConfig::default()).unwrap();
        assert_eq!(e.intervals, Some(vec![[1.5, 2.0]]));
        assert_eq!(e.fonc_pass, vec![Some(true), Some(true)]);
    }
}
