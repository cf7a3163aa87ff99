//! Unconstrained problems with a plane payoff and a discontinuous payoff
//! bounded by it, solved on a finite window with an interiority check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::domain::BoxDomain;
use crate::envelope::fd_gradient_with_tol;
use crate::error::{Error, Result};
use crate::grid::{Topology, ValueGrid};
use crate::payoff::{AffineExpr, Piece, PiecewisePayoff, Region, POINT_EPS};
use crate::problem::Problem;
use crate::solver::{solve, Solution, SolveConfig};

/// Maximizers closer than this to the window boundary invalidate the window.
const WINDOW_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneBoundProblem {
    plane: AffineExpr,
    anchors: BoxDomain,
    window: BoxDomain,
    plane_problem: Problem,
    bound_problem: Problem,
}

impl PlaneBoundProblem {
    /// `plane` is the dominating payoff `f`, `bound` the payoff `f~ <= f`
    /// given on `window`. Anchors range over `anchors`, which must sit inside
    /// the window.
    pub fn new(
        plane: AffineExpr,
        bound: PiecewisePayoff,
        cost: CostSpec,
        anchors: BoxDomain,
        window: BoxDomain,
    ) -> Result<Self> {
        let n = window.dim();
        if !matches!(cost, CostSpec::ConvexRadial { .. }) {
            return Err(Error::Precondition(
                "plane bounds need a strictly convex radial cost".into(),
            ));
        }
        plane.check(n, "plane")?;
        if plane.gradient(n).iter().any(|&c| c < 0.0) {
            return Err(Error::Precondition("plane must be non-decreasing".into()));
        }
        if !anchors.is_subset_of(&window) {
            return Err(Error::input("anchors box must lie inside the window"));
        }
        if bound.domain() != &window {
            return Err(Error::input("bound payoff must be defined on the window"));
        }
        if !bound.spikes().is_empty() {
            return Err(Error::Unsupported("spikes in a bound payoff".into()));
        }
        check_dominated(&plane, &bound)?;
        check_non_decreasing(&bound)?;

        let plane_payoff = PiecewisePayoff::new(
            &window,
            vec![Piece::new(
                Region::closed(window.lo().to_vec(), window.hi().to_vec()),
                plane.clone(),
            )],
            vec![],
            None,
        )?;
        Ok(PlaneBoundProblem {
            plane_problem: Problem::new(plane_payoff, cost.clone(), window.clone())?,
            bound_problem: Problem::new(bound, cost, window.clone())?,
            plane,
            anchors,
            window,
        })
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn plane(&self) -> &AffineExpr {
        &self.plane
    }

    pub fn anchors(&self) -> &BoxDomain {
        &self.anchors
    }

    pub fn window(&self) -> &BoxDomain {
        &self.window
    }

    pub fn plane_problem(&self) -> &Problem {
        &self.plane_problem
    }

    pub fn bound_problem(&self) -> &Problem {
        &self.bound_problem
    }

    pub fn cost(&self) -> &CostSpec {
        self.plane_problem.cost()
    }

    /// `V(x) = f(x) + max_r (|grad f| r - a r^p)` for `g = a ||y - x||^p`.
    pub fn plane_value(&self, x: &[f64]) -> f64 {
        let CostSpec::ConvexRadial { coefficient: a, power: p } = *self.cost() else {
            unreachable!("checked at construction")
        };
        let s = self.plane.gradient(self.dim()).iter().map(|c| c * c).sum::<f64>().sqrt();
        let r = (s / (a * p)).powf(1.0 / (p - 1.0));
        self.plane.eval(x) + s * r - a * r.powf(p)
    }

    /// `f(y) - g(x, y)`, the membership function of `Z(x)`.
    pub fn plane_objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.plane.eval(y) - self.cost().eval(x, y)
    }

    fn check_window(&self, x: &[f64], s: &Solution) -> Result<()> {
        for y in &s.argmax_set {
            let touches = (0..self.dim()).any(|i| {
                y[i] - self.window.lo()[i] <= WINDOW_MARGIN || self.window.hi()[i] - y[i] <= WINDOW_MARGIN
            });
            if touches {
                return Err(Error::WindowTooSmall {
                    anchor: x.to_vec(),
                    maximizer: y.clone(),
                });
            }
        }
        Ok(())
    }
}

fn check_dominated(plane: &AffineExpr, bound: &PiecewisePayoff) -> Result<()> {
    for (k, p) in bound.pieces().iter().enumerate() {
        // both affine on the closed box: the gap is extremal at corners
        for c in p.region.corners() {
            if p.expr.eval(&c) > plane.eval(&c) + POINT_EPS {
                return Err(Error::Precondition(format!(
                    "bound payoff piece {k} exceeds the plane at {c:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Non-negative slopes inside every piece, and no drop across any face
/// shared by two pieces.
fn check_non_decreasing(bound: &PiecewisePayoff) -> Result<()> {
    let n = bound.dim();
    let pieces = bound.pieces();
    for (k, p) in pieces.iter().enumerate() {
        if p.expr.gradient(n).iter().any(|&c| c < 0.0) {
            return Err(Error::Precondition(format!(
                "bound payoff piece {k} decreases in some coordinate"
            )));
        }
    }
    for (k, lower) in pieces.iter().enumerate() {
        for (j, upper) in pieces.iter().enumerate() {
            for axis in 0..n {
                if (lower.region.hi[axis] - upper.region.lo[axis]).abs() > POINT_EPS {
                    continue;
                }
                let mut lo = Vec::with_capacity(n);
                let mut hi = Vec::with_capacity(n);
                let mut shared = true;
                for i in 0..n {
                    if i == axis {
                        lo.push(upper.region.lo[i]);
                        hi.push(upper.region.lo[i]);
                        continue;
                    }
                    let a = lower.region.lo[i].max(upper.region.lo[i]);
                    let b = lower.region.hi[i].min(upper.region.hi[i]);
                    shared &= a < b;
                    lo.push(a);
                    hi.push(b);
                }
                if !shared {
                    continue;
                }
                for c in crate::domain::corners_of(&lo, &hi) {
                    if upper.expr.eval(&c) + POINT_EPS < lower.expr.eval(&c) {
                        return Err(Error::Precondition(format!(
                            "bound payoff drops from piece {k} to piece {j} across {c:?}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub expected: Vec<f64>,
    /// Max over interior anchor nodes and axes of `|dV/dx_i - df/dx_i|`.
    pub max_error: f64,
    /// Spread of `V(x) - f(x)` over the nodes; zero for a parallel plane.
    pub offset_spread: f64,
    pub nodes_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    /// `max (V~ - V)` over nodes.
    pub worst_gap: f64,
    pub violations: usize,
    pub v_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCheck {
    /// `min f(y) - g(x, y)` over all `V~`-maximizers `y`.
    pub worst_slack: f64,
    pub maximizers_checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneBoundReport {
    pub plane_grid: ValueGrid,
    pub bound_grid: ValueGrid,
    pub gradient: GradientCheck,
    pub dominance: DominanceCheck,
    pub membership: MembershipCheck,
}

impl PlaneBoundReport {
    pub fn passes(&self) -> bool {
        self.dominance.violations == 0 && self.membership.violations == 0
    }
}

/// Solves both problems at every node of a `cells`-per-axis grid over the
/// anchors box. Fails with [`Error::WindowTooSmall`] when some maximizer
/// comes within reach of the window boundary.
pub fn plane_bound_solve(pb: &PlaneBoundProblem, cells: usize, cfg: &SolveConfig) -> Result<PlaneBoundReport> {
    cfg.validate()?;
    let shape = ValueGrid::from_values(
        pb.anchors.clone(),
        cells,
        Topology::Box,
        vec![0.0; (cells + 1).pow(pb.dim() as u32)],
    )?;
    let solved: Vec<(Solution, Solution)> = (0..shape.len())
        .into_par_iter()
        .map(|k| {
            let x = shape.coord(k);
            let a = solve(&pb.plane_problem, &x, cfg)?;
            let b = solve(&pb.bound_problem, &x, cfg)?;
            pb.check_window(&x, &a)?;
            pb.check_window(&x, &b)?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;

    let plane_grid = ValueGrid::from_values(
        pb.anchors.clone(),
        cells,
        Topology::Box,
        solved.iter().map(|s| s.0.value).collect(),
    )?
    .with_config(cfg.clone());
    let bound_grid = ValueGrid::from_values(
        pb.anchors.clone(),
        cells,
        Topology::Box,
        solved.iter().map(|s| s.1.value).collect(),
    )?
    .with_config(cfg.clone());

    let expected = pb.plane.gradient(pb.dim());
    let mut max_error = 0.0_f64;
    let mut nodes_checked = 0;
    for k in (0..plane_grid.len()).filter(|&k| plane_grid.is_interior(k)) {
        let g = fd_gradient_with_tol(&plane_grid, k, f64::INFINITY)?;
        for (a, b) in g.gradient.iter().zip(&expected) {
            max_error = max_error.max((a - b).abs());
        }
        nodes_checked += 1;
    }
    let offsets: Vec<f64> = (0..plane_grid.len())
        .map(|k| plane_grid.value(k) - pb.plane.eval(&plane_grid.coord(k)))
        .collect();
    let offset_spread = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - offsets.iter().copied().fold(f64::INFINITY, f64::min);

    let gaps = solved.iter().map(|(a, b)| b.value - a.value);
    let dominance = DominanceCheck {
        worst_gap: gaps.clone().fold(f64::NEG_INFINITY, f64::max),
        violations: gaps.filter(|&g| g > cfg.v_tol).count(),
        v_tol: cfg.v_tol,
    };

    let mut membership = MembershipCheck {
        worst_slack: f64::INFINITY,
        maximizers_checked: 0,
        violations: 0,
    };
    for (k, (_, b)) in solved.iter().enumerate() {
        let x = shape.coord(k);
        for y in &b.argmax_set {
            let slack = pb.plane_objective(&x, y);
            membership.worst_slack = membership.worst_slack.min(slack);
            membership.maximizers_checked += 1;
            if slack < -cfg.v_tol {
                membership.violations += 1;
            }
        }
    }

    Ok(PlaneBoundReport {
        plane_grid,
        bound_grid,
        gradient: GradientCheck {
            expected,
            max_error,
            offset_spread,
            nodes_checked,
        },
        dominance,
        membership,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_steps(window: &BoxDomain) -> PiecewisePayoff {
        let (lo, hi) = (window.lo()[0] as i64, window.hi()[0] as i64);
        let pieces = (lo..hi)
            .map(|k| {
                let last = k + 1 == hi;
                Piece::new(
                    Region::interval(k as f64, true, (k + 1) as f64, last),
                    AffineExpr::constant(k as f64),
                )
            })
            .collect();
        PiecewisePayoff::new(window, pieces, vec![], None).unwrap()
    }

    fn setup(anchors: (f64, f64)) -> PlaneBoundProblem {
        let window = BoxDomain::new(vec![-2.0], vec![6.0]).unwrap();
        PlaneBoundProblem::new(
            AffineExpr::new(0.0, vec![1.0]),
            floor_steps(&window),
            CostSpec::ConvexRadial {
                coefficient: 1.0,
                power: 2.0,
            },
            BoxDomain::new(vec![anchors.0], vec![anchors.1]).unwrap(),
            window,
        )
        .unwrap()
    }

    #[test]
    fn plane_value_is_shifted_plane() {
        let pb = setup((0.0, 3.0));
        assert!((pb.plane_value(&[1.0]) - 1.25).abs() < 1e-15);
        let r = plane_bound_solve(&pb, 60, &SolveConfig::default()).unwrap();
        for k in 0..r.plane_grid.len() {
            let x = r.plane_grid.coord(k);
            assert!((r.plane_grid.value(k) - (x[0] + 0.25)).abs() < 1e-9);
        }
        assert!(r.gradient.max_error < 1e-6);
        assert!(r.passes(), "{:?} {:?}", r.dominance, r.membership);
    }

    #[test]
    fn window_interiority_is_enforced() {
        let window = BoxDomain::new(vec![-2.0], vec![6.0]).unwrap();
        let pb = PlaneBoundProblem::new(
            AffineExpr::new(0.0, vec![1.0]),
            floor_steps(&window),
            CostSpec::ConvexRadial {
                coefficient: 1.0,
                power: 2.0,
            },
            BoxDomain::new(vec![0.0], vec![5.9]).unwrap(),
            window,
        )
        .unwrap();
        let e = plane_bound_solve(&pb, 59, &SolveConfig::default());
        assert!(matches!(e, Err(Error::WindowTooSmall { .. })), "{e:?}");
    }

    #[test]
    fn preconditions() {
        let window = BoxDomain::new(vec![-2.0], vec![6.0]).unwrap();
        let anchors = BoxDomain::new(vec![0.0], vec![3.0]).unwrap();
        let radial = CostSpec::ConvexRadial {
            coefficient: 1.0,
            power: 2.0,
        };
        let above = PiecewisePayoff::new(
            &window,
            vec![Piece::new(
                Region::closed(vec![-2.0], vec![6.0]),
                AffineExpr::constant(0.5),
            )],
            vec![],
            None,
        )
        .unwrap();
        let plane = AffineExpr::new(0.0, vec![1.0]);
        let e = PlaneBoundProblem::new(plane.clone(), above, radial.clone(), anchors.clone(), window.clone());
        assert!(matches!(e, Err(Error::Precondition(_))));

        let dropping = PiecewisePayoff::new(
            &window,
            vec![
                Piece::new(Region::interval(-2.0, true, 1.0, false), AffineExpr::constant(-3.0)),
                Piece::new(Region::interval(1.0, true, 2.0, false), AffineExpr::constant(1.0)),
                Piece::new(Region::interval(2.0, true, 6.0, true), AffineExpr::constant(0.0)),
            ],
            vec![],
            None,
        )
        .unwrap();
        let e = PlaneBoundProblem::new(plane.clone(), dropping, radial, anchors.clone(), window.clone());
        assert!(matches!(e, Err(Error::Precondition(_))), "{e:?}");

        let e = PlaneBoundProblem::new(plane, floor_steps(&window), CostSpec::scaled_norm(1.0), anchors, window);
        assert!(matches!(e, Err(Error::Precondition(_))));
    }
}
