//! Upper Dini derivatives of the objective in the choice variable, the
//! generalized first-order condition at maxima, and one-dimensional
//! sub/superdifferentials of sampled value functions.
//!
//! The upper Dini derivative is
//! `dh(y; v) = limsup_{w -> v, t -> 0+} (h(y + t w) - h(y)) / t`. It is
//! estimated on the step schedule `t_k = t0 * rho^k` over a direction net made
//! of `v` and its renormalized coordinate perturbations `v +- delta e_i`.
//!
//! Each direction is classified from the tail of its trace by a least-squares
//! fit `h(y + t w) - h(y) = K + s t`. A negative intercept with a near-zero
//! residual is a downward jump, so the quotient behaves like `K / t` and the
//! derivative is `-inf`. Otherwise the quotients converge and the limit is
//! extrapolated from the last two levels.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::default_kink_tol;
use crate::error::{Error, Result};
use crate::grid::{fmt_num, Topology, ValueGrid};
use crate::problem::Problem;

const JUMP_INTERCEPT: f64 = -1e-6;
const JUMP_RESIDUAL: f64 = 1e-8;
const UNIT_TOL: f64 = 1e-9;
const NET_SEED: u64 = 0x5eed_d1e1;

/// `y -> h(x, y)` for a fixed anchor.
pub trait ChoiceObjective: Sync {
    fn dim(&self) -> usize;
    /// `None` when `y` is not a feasible choice.
    fn value(&self, y: &[f64]) -> Option<f64>;
    fn is_interior(&self, y: &[f64]) -> bool;
}

/// A box problem with its anchor fixed.
pub struct Anchored<'a> {
    pub problem: &'a Problem,
    pub anchor: &'a [f64],
}

impl ChoiceObjective for Anchored<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, y: &[f64]) -> Option<f64> {
        self.problem.objective_opt(self.anchor, y)
    }

    fn is_interior(&self, y: &[f64]) -> bool {
        self.problem.domain().is_interior(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniSchedule {
    pub t0: f64,
    pub ratio: f64,
    pub levels: usize,
    /// Direction perturbation radius.
    pub delta: f64,
    /// Tail quotients must agree to this for a finite estimate to count as settled.
    pub dini_tol: f64,
}

impl Default for DiniSchedule {
    fn default() -> Self {
        DiniSchedule {
            t0: 1e-1,
            ratio: 0.5,
            levels: 20,
            delta: 1e-3,
            dini_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DiniClass {
    Finite(f64),
    NegInfinity,
    PosInfinity,
}

impl DiniClass {
    pub fn finite(&self) -> Option<f64> {
        match self {
            DiniClass::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniEstimate {
    pub direction: Vec<f64>,
    /// `(t_k, sup_w quotient)`; levels where every direction is infeasible are omitted.
    pub quotient_trace: Vec<(f64, f64)>,
    pub classification: DiniClass,
    /// The jump `K` when the quotients behave like `K / t`.
    pub jump_magnitude: Option<f64>,
    /// Whether the finite tail settled within `dini_tol`.
    pub stabilized: bool,
}

impl DiniEstimate {
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "quotient"])?;
        for (t, q) in &self.quotient_trace {
            out.write_record([fmt_num(*t), fmt_num(*q)])?;
        }
        out.flush()?;
        Ok(())
    }
}

struct DirectionTrace {
    /// `(t, h(y + t w) - h(y))` at feasible levels.
    diffs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Classified {
    class: DiniClass,
    jump: Option<f64>,
    stabilized: bool,
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / n).collect()
}

fn direction_net(v: &[f64], delta: f64) -> Vec<Vec<f64>> {
    let mut net = vec![v.to_vec()];
    for i in 0..v.len() {
        for s in [delta, -delta] {
            let mut w = v.to_vec();
            w[i] += s;
            let w = normalize(&w);
            if net
                .iter()
                .all(|u| u.iter().zip(&w).any(|(a, b)| (a - b).abs() > 1e-15))
            {
                net.push(w);
            }
        }
    }
    net
}

fn classify(trace: &DirectionTrace, sched: &DiniSchedule) -> Option<Classified> {
    if trace.diffs.is_empty() {
        return None;
    }
    let tail_start = trace.diffs.len().saturating_sub((sched.levels / 2).max(3));
    let tail = &trace.diffs[tail_start..];

    if tail.len() >= 3 {
        let m = tail.len() as f64;
        let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / m;
        let mean_d = tail.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = tail.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
        let sxy: f64 = tail.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_d)).sum();
        let slope = sxy / sxx;
        let intercept = mean_d - slope * mean_t;
        let residual = tail
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).abs())
            .fold(0.0, f64::max);
        if residual < JUMP_RESIDUAL {
            if intercept < JUMP_INTERCEPT {
                return Some(Classified {
                    class: DiniClass::NegInfinity,
                    jump: Some(intercept),
                    stabilized: true,
                });
            }
            if intercept > -JUMP_INTERCEPT {
                return Some(Classified {
                    class: DiniClass::PosInfinity,
                    jump: Some(intercept),
                    stabilized: true,
                });
            }
        }
    }

    let q: Vec<(f64, f64)> = tail.iter().map(|&(t, d)| (t, d / t)).collect();
    let (value, stabilized) = match q.as_slice() {
        [.., (t1, q1), (t2, q2)] => {
            // first-order Richardson on q(t) = D + a t + ...
            let r = t2 / t1;
            ((q2 - r * q1) / (1.0 - r), (q2 - q1).abs() <= sched.dini_tol)
        }
        [(_, q1)] => (*q1, false),
        [] => return None,
    };
    Some(Classified {
        class: DiniClass::Finite(value),
        jump: None,
        stabilized,
    })
}

/// Upper Dini derivative of `obj` at `y` in unit direction `v`.
pub fn upper_dini_objective<O: ChoiceObjective + ?Sized>(
    obj: &O,
    y: &[f64],
    v: &[f64],
    sched: &DiniSchedule,
) -> Result<DiniEstimate> {
    if y.len() != obj.dim() || v.len() != obj.dim() {
        return Err(Error::input("point and direction must match the problem dimension"));
    }
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::input(format!("direction {v:?} is not a unit vector")));
    }
    if !(sched.t0 > 0.0) || !(sched.ratio > 0.0 && sched.ratio < 1.0) || sched.levels < 2 {
        return Err(Error::input("invalid step schedule"));
    }
    let base = obj
        .value(y)
        .ok_or_else(|| Error::input(format!("point {y:?} is not a feasible choice")))?;

    let net = direction_net(v, sched.delta);
    let steps: Vec<f64> = (0..sched.levels)
        .map(|k| sched.t0 * sched.ratio.powi(k as i32))
        .collect();

    let traces: Vec<DirectionTrace> = net
        .iter()
        .map(|w| DirectionTrace {
            diffs: steps
                .iter()
                .filter_map(|&t| {
                    let p: Vec<f64> = y.iter().zip(w).map(|(a, b)| a + t * b).collect();
                    obj.value(&p).map(|h| (t, h - base))
                })
                .collect(),
        })
        .collect();

    let quotient_trace: Vec<(f64, f64)> = steps
        .iter()
        .filter_map(|&t| {
            traces
                .iter()
                .filter_map(|tr| tr.diffs.iter().find(|p| p.0 == t).map(|p| p.1 / t))
                .reduce(f64::max)
                .map(|q| (t, q))
        })
        .collect();
    if quotient_trace.is_empty() {
        return Err(Error::Boundary(format!(
            "every step from {y:?} along {v:?} leaves the domain"
        )));
    }

    let classes: Vec<Option<Classified>> = traces.iter().map(|t| classify(t, sched)).collect();
    let feasible: Vec<Classified> = classes.iter().flatten().copied().collect();

    let result = if feasible.iter().any(|c| c.class == DiniClass::PosInfinity) {
        let jump = feasible
            .iter()
            .filter_map(|c| (c.class == DiniClass::PosInfinity).then_some(c.jump).flatten())
            .reduce(f64::max);
        Classified {
            class: DiniClass::PosInfinity,
            jump,
            stabilized: true,
        }
    } else if feasible.iter().all(|c| c.class == DiniClass::NegInfinity) {
        Classified {
            class: DiniClass::NegInfinity,
            jump: feasible.iter().filter_map(|c| c.jump).reduce(f64::max),
            stabilized: true,
        }
    } else if let Some(own @ Classified {
        class: DiniClass::Finite(_),
        ..
    }) = classes[0]
    {
        own
    } else {
        // v itself jumps or is infeasible; a nearby direction stays on the upper side
        feasible
            .iter()
            .filter(|c| matches!(c.class, DiniClass::Finite(_)))
            .copied()
            .max_by(|a, b| a.class.finite().unwrap().total_cmp(&b.class.finite().unwrap()))
            .expect("a finite direction exists")
    };

    Ok(DiniEstimate {
        direction: v.to_vec(),
        quotient_trace,
        classification: result.class,
        jump_magnitude: result.jump,
        stabilized: result.stabilized,
    })
}

pub fn upper_dini(
    problem: &Problem,
    x: &[f64],
    y: &[f64],
    v: &[f64],
    sched: &DiniSchedule,
) -> Result<DiniEstimate> {
    problem.domain().check_point(x, "anchor")?;
    problem.domain().check_point(y, "choice")?;
    upper_dini_objective(&Anchored { problem, anchor: x }, y, v, sched)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoncReport {
    pub passes: bool,
    /// Direction with the largest finite estimate, if any estimate is finite.
    pub worst_direction: Option<Vec<f64>>,
    pub worst_value: Option<f64>,
    /// The net is finite, so a pass certifies the condition only up to its resolution.
    pub net_size: usize,
    pub finite_directions: usize,
    pub neg_infinite_directions: usize,
}

/// `2n` axis directions followed by `extra` seeded random unit vectors.
pub fn default_direction_net(dim: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut net = Vec::with_capacity(2 * dim + extra);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = s;
            net.push(d);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NET_SEED);
    while net.len() < 2 * dim + extra {
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = w.iter().map(|a| a * a).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            net.push(normalize(&w));
        }
    }
    net
}

/// Default net: axis directions plus 64 random directions for `2 <= n <= 3`
/// (on the line the axis directions are already every unit vector).
pub fn default_net_for(dim: usize) -> Vec<Vec<f64>> {
    default_direction_net(dim, if (2..=3).contains(&dim) { 64 } else { 0 })
}

pub const DEFAULT_FONC_TOL: f64 = 1e-6;

/// Checks `0` is a Dini supergradient at `y`: every direction's upper Dini
/// derivative is `<= tol` or `-inf`.
pub fn fonc_check_objective<O: ChoiceObjective + ?Sized>(
    obj: &O,
    y: &[f64],
    net: &[Vec<f64>],
    tol: f64,
    sched: &DiniSchedule,
) -> Result<FoncReport> {
    if !obj.is_interior(y) {
        return Err(Error::Boundary(format!(
            "first-order condition not applicable: {y:?} is not an interior point"
        )));
    }
    if net.is_empty() {
        return Err(Error::input("direction net must not be empty"));
    }
    let mut worst: Option<(f64, Vec<f64>)> = None;
    let mut passes = true;
    let (mut finite, mut neg_inf) = (0, 0);
    for v in net {
        let est = upper_dini_objective(obj, y, v, sched)?;
        match est.classification {
            DiniClass::Finite(d) => {
                finite += 1;
                if d > tol {
                    passes = false;
                }
                if worst.as_ref().map_or(true, |(w, _)| d > *w) {
                    worst = Some((d, v.clone()));
                }
            }
            DiniClass::NegInfinity => neg_inf += 1,
            DiniClass::PosInfinity => passes = false,
        }
    }
    Ok(FoncReport {
        passes,
        worst_value: worst.as_ref().map(|w| w.0),
        worst_direction: worst.map(|w| w.1),
        net_size: net.len(),
        finite_directions: finite,
        neg_infinite_directions: neg_inf,
    })
}

pub fn fonc_check(
    problem: &Problem,
    x: &[f64],
    y: &[f64],
    net: Option<&[Vec<f64>]>,
) -> Result<FoncReport> {
    problem.domain().check_point(x, "anchor")?;
    problem.domain().check_point(y, "choice")?;
    let default;
    let net = match net {
        Some(n) => n,
        None => {
            default = default_net_for(problem.dim());
            &default
        }
    };
    fonc_check_objective(
        &Anchored { problem, anchor: x },
        y,
        net,
        DEFAULT_FONC_TOL,
        &DiniSchedule::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferentialKind {
    Gradient,
    /// Concave kink: left slope above right slope.
    Super,
    /// Convex kink.
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialInterval {
    pub kind: DifferentialKind,
    pub lo: f64,
    pub hi: f64,
}

/// Sub/superdifferential of a one-dimensional value grid at node `node` from
/// its one-sided slopes. `kink_tol` defaults to the kink-classification tolerance.
pub fn differential_interval(
    grid: &ValueGrid,
    node: usize,
    kink_tol: Option<f64>,
) -> Result<DifferentialInterval> {
    if grid.dim() != 1 {
        return Err(Error::Unsupported("differential intervals need a 1-D grid".into()));
    }
    if node >= grid.len() {
        return Err(Error::input(format!("node {node} out of range")));
    }
    if grid.topology() == Topology::Box && !grid.is_interior(node) {
        return Err(Error::Boundary(format!("node {node} is a grid endpoint")));
    }
    let h = grid.spacing(0);
    let left = grid.neighbor(node, 0, -1).expect("interior node");
    let right = grid.neighbor(node, 0, 1).expect("interior node");
    let s_minus = (grid.value(node) - grid.value(left)) / h;
    let s_plus = (grid.value(right) - grid.value(node)) / h;
    let tol = kink_tol.unwrap_or_else(|| default_kink_tol(grid));
    Ok(if (s_minus - s_plus).abs() <= tol {
        let s = 0.5 * (s_minus + s_plus);
        DifferentialInterval {
            kind: DifferentialKind::Gradient,
            lo: s,
            hi: s,
        }
    } else if s_minus > s_plus {
        DifferentialInterval {
            kind: DifferentialKind::Super,
            lo: s_plus,
            hi: s_minus,
        }
    } else {
        DifferentialInterval {
            kind: DifferentialKind::Sub,
            lo: s_minus,
            hi: s_plus,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::domain::BoxDomain;
    use crate::payoff::{AffineExpr, Piece, PiecewisePayoff, Region};

    fn step(alpha: f64) -> Problem {
        let c = BoxDomain::new(vec![0.0], vec![2.0]).unwrap();
        let f = PiecewisePayoff::new(
            &c,
            vec![
                Piece::new(Region::interval(0.0, true, 1.0, false), AffineExpr::constant(0.0)),
                Piece::new(
                    Region::interval(1.0, true, 2.0, true),
                    AffineExpr::new(0.0, vec![1.0]),
                ),
            ],
            vec![],
            None,
        )
        .unwrap();
        Problem::new(f, CostSpec::scaled_norm(alpha), c).unwrap()
    }

    /// `-(y - 1)^2` on `(0, 2)`, no cost.
    struct Quadratic;

    impl ChoiceObjective for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, y: &[f64]) -> Option<f64> {
            (0.0..=2.0).contains(&y[0]).then(|| -(y[0] - 1.0).powi(2))
        }
        fn is_interior(&self, y: &[f64]) -> bool {
            y[0] > 0.0 && y[0] < 2.0
        }
    }

    #[test]
    fn rightward_slope_inside_upper_piece() {
        let est = upper_dini(&step(2.0), &[0.75], &[1.0], &[1.0], &DiniSchedule::default()).unwrap();
        let d = est.classification.finite().unwrap();
        assert!((d + 1.0).abs() < 1e-9, "{d}");
        assert!(est.stabilized);
    }

    #[test]
    fn leftward_jump_is_neg_infinity() {
        let p = step(2.0);
        let est = upper_dini(&p, &[0.75], &[1.0], &[-1.0], &DiniSchedule::default()).unwrap();
        assert_eq!(est.classification, DiniClass::NegInfinity);
        // independent one-sided limit of h from the left, by direct evaluation
        let h1 = p.evaluate_objective(&[0.75], &[1.0]).unwrap();
        let left = p.evaluate_objective(&[0.75], &[1.0 - 1e-12]).unwrap();
        let k = est.jump_magnitude.unwrap();
        assert!((k - (left - h1)).abs() < 1e-9, "{k}");
        assert!((k + 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_stationary_point() {
        for v in [[1.0], [-1.0]] {
            let est = upper_dini_objective(&Quadratic, &[1.0], &v, &DiniSchedule::default()).unwrap();
            assert!(est.classification.finite().unwrap().abs() < 1e-9);
        }
        let r = fonc_check_objective(
            &Quadratic,
            &[1.0],
            &default_net_for(1),
            DEFAULT_FONC_TOL,
            &DiniSchedule::default(),
        )
        .unwrap();
        assert!(r.passes);
        assert_eq!(r.finite_directions, r.net_size);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let e = upper_dini(&step(2.0), &[0.75], &[1.0], &[2.0], &DiniSchedule::default());
        assert!(matches!(e, Err(Error::Input(_))));
    }

    #[test]
    fn all_steps_infeasible_is_boundary_error() {
        let e = upper_dini(&step(2.0), &[0.75], &[2.0], &[1.0], &DiniSchedule::default());
        assert!(matches!(e, Err(Error::Boundary(_))));
    }

    #[test]
    fn fonc_at_maximizer_and_non_maximizer() {
        let p = step(2.0);
        let ok = fonc_check(&p, &[0.75], &[1.0], None).unwrap();
        assert!(ok.passes);
        assert!((ok.worst_value.unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(ok.neg_infinite_directions, 1);

        let bad = fonc_check(&p, &[0.75], &[0.9], None).unwrap();
        assert!(!bad.passes);
        assert!((bad.worst_value.unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(bad.worst_direction.unwrap(), vec![-1.0]);
    }

    #[test]
    fn fonc_rejects_boundary_points() {
        let e = fonc_check(&step(2.0), &[0.5], &[2.0], None);
        assert!(matches!(e, Err(Error::Boundary(_))));
    }

    #[test]
    fn net_has_axes_then_random_units() {
        let net = default_net_for(2);
        assert_eq!(net.len(), 68);
        assert_eq!(net[0], vec![1.0, 0.0]);
        assert_eq!(net[3], vec![0.0, -1.0]);
        for v in &net {
            let n: f64 = v.iter().map(|a| a * a).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(net, default_net_for(2));
    }
}
