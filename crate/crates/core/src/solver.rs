//! Boundary-seeded grid search with per-piece local refinement.
//!
//! The objective restricted to the closure of one payoff piece is
//! `phi_p(y) = expr_p(y) - g(x, y)`, which is continuous, and the regularized
//! payoff dominates `expr_p` on that closure. So
//! `V(x) = max_p max_{y in cl(R_p)} phi_p(y)` (together with spike points), and
//! each inner maximization is a continuous problem over a closed box. The
//! search seeds every piece with the projection of `x`, the nearest point of
//! each facet and the facet corners, plus a uniform grid, then refines the
//! best seed of each piece without ever leaving that piece's closure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ExtraNode, Topology, ValueGrid};
use crate::payoff::Piece;
use crate::problem::Problem;

const GOLDEN_ITERS: usize = 80;
const MAX_SWEEPS: usize = 8;
const MOVES_PER_LEVEL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Seed grid cells per axis (`grid_per_axis + 1` nodes per axis).
    pub grid_per_axis: usize,
    /// Pattern-search levels; the step halves at every level.
    pub refine_depth: usize,
    /// Maximizers closer than this are the same point.
    pub y_tol: f64,
    /// Candidates within this of the best value belong to the argmax set.
    pub v_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            grid_per_axis: 256,
            refine_depth: 20,
            y_tol: 1e-6,
            v_tol: 1e-9,
        }
    }
}

impl SolveConfig {
    /// Default config with the seed grid scaled so that the seed count stays
    /// manageable when solving on a whole value grid: 256 cells in one
    /// dimension, 16 in two, 8 beyond.
    pub fn for_dim(dim: usize) -> Self {
        let grid_per_axis = match dim {
            0 | 1 => 256,
            2 => 16,
            _ => 8,
        };
        SolveConfig {
            grid_per_axis,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_per_axis < 2 {
            return Err(Error::param("grid_per_axis", "must be at least 2"));
        }
        if !(self.y_tol > 0.0) || !self.y_tol.is_finite() {
            return Err(Error::param("y_tol", "must be positive"));
        }
        if !(self.v_tol > 0.0) || !self.v_tol.is_finite() {
            return Err(Error::param("v_tol", "must be positive"));
        }
        Ok(())
    }
}

/// `V(x)` with representatives of the maximizer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub anchor: Vec<f64>,
    pub value: f64,
    /// Lexicographically sorted, deduplicated at `y_tol`.
    pub argmax_set: Vec<Vec<f64>>,
    /// Per maximizer: whether the payoff is discontinuous there.
    pub attained_at_discontinuity: Vec<bool>,
}

#[derive(Debug, Clone)]
struct Candidate {
    point: Vec<f64>,
    value: f64,
}

pub fn solve(problem: &Problem, x: &[f64], cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    problem.domain().check_point(x, "anchor")?;
    let candidates = candidates(problem, x, cfg);
    Ok(assemble(problem, x, candidates, cfg))
}

fn candidates(problem: &Problem, x: &[f64], cfg: &SolveConfig) -> Vec<Candidate> {
    let pieces = problem.payoff().pieces();
    let domain = problem.domain();
    let n = domain.dim();

    let mut out: Vec<Candidate> = Vec::new();
    let push = |out: &mut Vec<Candidate>, y: Vec<f64>| {
        let value = problem.objective(x, &y);
        out.push(Candidate { point: y, value });
    };

    // best (phi_p value, point) per piece, for refinement
    let mut best: Vec<Option<(f64, Vec<f64>)>> = vec![None; pieces.len()];
    let offer = |best: &mut Vec<Option<(f64, Vec<f64>)>>, k: usize, y: &[f64]| {
        let v = piece_objective(problem, &pieces[k], x, y);
        match &best[k] {
            Some((bv, _)) if *bv >= v => {}
            _ => best[k] = Some((v, y.to_vec())),
        }
    };

    push(&mut out, x.to_vec());
    for (k, p) in pieces.iter().enumerate() {
        if p.region.closure_contains(x) {
            offer(&mut best, k, x);
        }
    }

    for (k, p) in pieces.iter().enumerate() {
        let proj = p.region.project(x);
        offer(&mut best, k, &proj);
        push(&mut out, proj.clone());
        for axis in 0..n {
            for face in [p.region.lo[axis], p.region.hi[axis]] {
                let mut y = proj.clone();
                y[axis] = face;
                offer(&mut best, k, &y);
                push(&mut out, y);
            }
        }
        for c in p.region.corners() {
            offer(&mut best, k, &c);
            push(&mut out, c);
        }
    }

    for s in problem.payoff().spikes() {
        push(&mut out, s.point.clone());
    }

    let m = cfg.grid_per_axis + 1;
    let total = m.pow(n as u32);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let y: Vec<f64> = (0..n)
            .map(|a| {
                if idx[a] == cfg.grid_per_axis {
                    domain.hi()[a]
                } else {
                    domain.lo()[a] + idx[a] as f64 * domain.width(a) / cfg.grid_per_axis as f64
                }
            })
            .collect();
        if let Some(k) = problem.payoff().owner(&y) {
            offer(&mut best, k, &y);
        }
        push(&mut out, y);
        for i in idx.iter_mut() {
            *i += 1;
            if *i < m {
                break;
            }
            *i = 0;
        }
    }

    for (k, b) in best.into_iter().enumerate() {
        if let Some((v, y)) = b {
            let refined = refine_in_piece(problem, &pieces[k], x, y, v, cfg.refine_depth);
            push(&mut out, refined);
        }
    }
    out
}

fn piece_objective(problem: &Problem, piece: &Piece, x: &[f64], y: &[f64]) -> f64 {
    piece.expr.eval(y) - problem.cost().eval(x, y)
}

/// Coordinate golden-section sweeps followed by a compass search whose step
/// halves at each of `depth` levels. Only improving moves are taken, and every
/// trial point is clamped into the closure of `piece`.
fn refine_in_piece(
    problem: &Problem,
    piece: &Piece,
    x: &[f64],
    start: Vec<f64>,
    start_value: f64,
    depth: usize,
) -> Vec<f64> {
    let region = &piece.region;
    let n = start.len();
    let phi = |y: &[f64]| piece_objective(problem, piece, x, y);

    let mut y = start;
    let mut fy = start_value;

    for _ in 0..MAX_SWEEPS {
        let before = fy;
        for axis in 0..n {
            let (lo, hi) = (region.lo[axis], region.hi[axis]);
            let mut trial = y.clone();
            let mut along = |t: f64| {
                trial[axis] = t;
                phi(&trial)
            };
            let (t_best, f_best) = golden_max(&mut along, lo, hi);
            for (t, f) in [(t_best, f_best), (lo, along(lo)), (hi, along(hi))] {
                if f > fy {
                    fy = f;
                    y[axis] = t;
                }
            }
        }
        if fy <= before {
            break;
        }
    }

    let dirs = compass_directions(n);
    let mut step = 0.25
        * (0..n)
            .map(|a| region.hi[a] - region.lo[a])
            .fold(0.0, f64::max);
    for _ in 0..depth {
        for _ in 0..MOVES_PER_LEVEL {
            let mut moved = false;
            let mut best = (fy, None);
            for d in &dirs {
                let trial: Vec<f64> = (0..n)
                    .map(|a| (y[a] + step * d[a]).clamp(region.lo[a], region.hi[a]))
                    .collect();
                let f = phi(&trial);
                if f > best.0 {
                    best = (f, Some(trial));
                }
            }
            if let (f, Some(t)) = best {
                fy = f;
                y = t;
                moved = true;
            }
            if !moved {
                break;
            }
        }
        step *= 0.5;
    }
    y
}

fn golden_max<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Axis directions and, for `n >= 2`, the normalized pairwise diagonals.
fn compass_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; n];
                d[i] = si * r;
                d[j] = sj * r;
                dirs.push(d);
            }
        }
    }
    dirs
}

fn assemble(problem: &Problem, x: &[f64], mut cands: Vec<Candidate>, cfg: &SolveConfig) -> Solution {
    let value = cands
        .iter()
        .map(|c| c.value)
        .fold(f64::NEG_INFINITY, f64::max);
    cands.retain(|c| c.value >= value - cfg.v_tol);
    cands.sort_by(|a, b| lex_cmp(&a.point, &b.point));
    let mut argmax_set: Vec<Vec<f64>> = Vec::new();
    for c in cands {
        if argmax_set.iter().all(|m| max_dist(m, &c.point) > cfg.y_tol) {
            argmax_set.push(c.point);
        }
    }
    let attained_at_discontinuity = argmax_set
        .iter()
        .map(|m| problem.payoff().is_discontinuity(m))
        .collect();
    Solution {
        anchor: x.to_vec(),
        value,
        argmax_set,
        attained_at_discontinuity,
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub(crate) fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Solves at every node of a `grid_per_axis`-cell grid over the problem domain.
///
/// Region-boundary coordinates that fall between grid nodes are sampled as
/// additional off-grid nodes and reported as a warning; the uniform node set
/// itself is unchanged.
pub fn value_function(problem: &Problem, grid_per_axis: usize, cfg: &SolveConfig) -> Result<ValueGrid> {
    cfg.validate()?;
    let mut grid = ValueGrid::build(problem.domain().clone(), grid_per_axis, Topology::Box, |x| {
        solve(problem, x, cfg).map(|s| s.value)
    })?
    .with_config(cfg.clone());

    let n = problem.dim();
    let mut off_grid: Vec<(usize, f64)> = Vec::new();
    for axis in 0..n {
        let h = grid.spacing(axis);
        for &b in &problem.payoff().boundary_coords()[axis] {
            let r = (b - problem.domain().lo()[axis]) / h;
            if (r - r.round()).abs() > 1e-9 {
                off_grid.push((axis, b));
            }
        }
    }
    if !off_grid.is_empty() {
        grid.warn(format!(
            "grid does not contain region-boundary coordinates {:?} (axis, value); \
             sampled them as extra nodes",
            off_grid
        ));
        let m = grid.nodes_per_axis();
        let others = m.pow(n as u32 - 1);
        let extra: Vec<Vec<f64>> = off_grid
            .iter()
            .flat_map(|&(axis, b)| {
                let grid = &grid;
                (0..others).map(move |k| {
                    let mut rest = k;
                    (0..n)
                        .map(|a| {
                            if a == axis {
                                b
                            } else {
                                let i = rest % m;
                                rest /= m;
                                grid.axis_coord(a, i)
                            }
                        })
                        .collect()
                })
            })
            .collect();
        let values: Result<Vec<f64>> = extra
            .par_iter()
            .map(|p| solve(problem, p, cfg).map(|s| s.value))
            .collect();
        for (point, value) in extra.into_iter().zip(values?) {
            grid.push_extra(ExtraNode { point, value });
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::domain::BoxDomain;
    use crate::payoff::{AffineExpr, PiecewisePayoff, Region, Spike};

    fn line() -> BoxDomain {
        BoxDomain::new(vec![0.0], vec![2.0]).unwrap()
    }

    fn step(alpha: f64) -> Problem {
        let f = PiecewisePayoff::new(
            &line(),
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
        Problem::new(f, CostSpec::scaled_norm(alpha), line()).unwrap()
    }

    #[test]
    fn step_interior_jump() {
        let s = solve(&step(2.0), &[0.75], &SolveConfig::default()).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert_eq!(s.argmax_set, vec![vec![1.0]]);
        assert_eq!(s.attained_at_discontinuity, vec![true]);
    }

    #[test]
    fn step_tie_reports_both() {
        let s = solve(&step(2.0), &[0.5], &SolveConfig::default()).unwrap();
        assert!(s.value.abs() < 1e-12);
        assert_eq!(s.argmax_set, vec![vec![0.5], vec![1.0]]);
    }

    #[test]
    fn spike_is_seeded() {
        let f = PiecewisePayoff::new(
            &line(),
            vec![Piece::new(Region::closed(vec![0.0], vec![2.0]), AffineExpr::constant(0.0))],
            vec![Spike {
                point: vec![1.0],
                value: 1.0,
            }],
            None,
        )
        .unwrap();
        let p = Problem::new(f, CostSpec::scaled_norm(1.0), line()).unwrap();
        let cfg = SolveConfig {
            grid_per_axis: 3,
            ..Default::default()
        };
        let s = solve(&p, &[0.3], &cfg).unwrap();
        assert!((s.value - 0.3).abs() < 1e-12);
        assert_eq!(s.argmax_set, vec![vec![1.0]]);
    }

    #[test]
    fn anchor_outside_domain() {
        assert!(matches!(
            solve(&step(2.0), &[3.0], &SolveConfig::default()),
            Err(Error::Input(_))
        ));
        let bad = SolveConfig {
            grid_per_axis: 1,
            ..Default::default()
        };
        assert!(solve(&step(2.0), &[1.0], &bad).is_err());
    }

    #[test]
    fn interior_smooth_maximizer_is_refined() {
        // f(y) = y on [-2, 2], g = (y - x)^2: maximizer x + 1/2 is off every seed grid node
        let d = BoxDomain::new(vec![-2.0], vec![2.0]).unwrap();
        let f = PiecewisePayoff::new(
            &d,
            vec![Piece::new(
                Region::closed(vec![-2.0], vec![2.0]),
                AffineExpr::new(0.0, vec![1.0]),
            )],
            vec![],
            None,
        )
        .unwrap();
        let p = Problem::new(
            f,
            CostSpec::ConvexRadial {
                coefficient: 1.0,
                power: 2.0,
            },
            d,
        )
        .unwrap();
        let cfg = SolveConfig {
            grid_per_axis: 7,
            ..Default::default()
        };
        let s = solve(&p, &[0.1234], &cfg).unwrap();
        assert!((s.value - 0.3734).abs() < 1e-12);
        assert!((s.argmax_set[0][0] - 0.6234).abs() < 1e-6);
    }

    #[test]
    fn off_grid_boundaries_are_inserted() {
        let g = value_function(&step(2.0), 3, &SolveConfig::default()).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.warnings().len(), 1);
        assert_eq!(g.extra_nodes().len(), 1);
        assert_eq!(g.extra_nodes()[0].point, vec![1.0]);
        assert!((g.extra_nodes()[0].value - 1.0).abs() < 1e-12);
    }
}
