//! Envelope properties of sampled value functions: finite-difference
//! gradients, kink detection, Lipschitz estimates, one-sided directional
//! derivatives, integral reconstruction and monotonicity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Topology, ValueGrid};
use crate::problem::Problem;
use crate::solver::{solve, SolveConfig};

/// Minimum nodes per axis for kink classification.
pub const MIN_KINK_RESOLUTION: usize = 64;

/// Max over adjacent node pairs of `|dV| / |dx|`.
pub fn lipschitz_estimate(grid: &ValueGrid) -> f64 {
    let mut best = 0.0_f64;
    for k in 0..grid.len() {
        for axis in 0..grid.dim() {
            if let Some(j) = grid.neighbor(k, axis, 1) {
                let s = (grid.value(j) - grid.value(k)).abs() / grid.spacing(axis);
                best = best.max(s);
            }
        }
    }
    best
}

/// `sqrt(h) L`, with `h` the largest spacing and `L` the grid's Lipschitz
/// estimate. At a genuine kink the one-sided slopes differ by O(1), at smooth
/// nodes by O(h). Floored at 1e-9 to absorb rounding on flat grids.
pub fn default_kink_tol(grid: &ValueGrid) -> f64 {
    let h = grid.spacings().into_iter().fold(0.0, f64::max);
    (h.sqrt() * lipschitz_estimate(grid)).max(1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSlopes {
    pub node: usize,
    pub point: Vec<f64>,
    pub backward: Vec<f64>,
    pub forward: Vec<f64>,
}

impl NodeSlopes {
    fn of(grid: &ValueGrid, node: usize) -> Option<Self> {
        let mut backward = Vec::with_capacity(grid.dim());
        let mut forward = Vec::with_capacity(grid.dim());
        let v = grid.value(node);
        for axis in 0..grid.dim() {
            let h = grid.spacing(axis);
            let l = grid.neighbor(node, axis, -1)?;
            let r = grid.neighbor(node, axis, 1)?;
            backward.push((v - grid.value(l)) / h);
            forward.push((grid.value(r) - v) / h);
        }
        Some(NodeSlopes {
            node,
            point: grid.coord(node),
            backward,
            forward,
        })
    }

    /// Largest disagreement between one-sided slopes over the axes.
    pub fn jump(&self) -> f64 {
        self.backward
            .iter()
            .zip(&self.forward)
            .map(|(b, f)| (f - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    /// False when the node fails the kink test, i.e. `V` is likely not
    /// differentiable there and the central difference is an average of slopes.
    pub valid: bool,
}

pub fn fd_gradient(grid: &ValueGrid, node: usize) -> Result<GradientEstimate> {
    fd_gradient_with_tol(grid, node, default_kink_tol(grid))
}

pub fn fd_gradient_with_tol(grid: &ValueGrid, node: usize, kink_tol: f64) -> Result<GradientEstimate> {
    if node >= grid.len() {
        return Err(Error::input(format!("node {node} out of range")));
    }
    let slopes = NodeSlopes::of(grid, node)
        .ok_or_else(|| Error::Boundary(format!("node {:?} is on the grid boundary", grid.coord(node))))?;
    let gradient = slopes
        .backward
        .iter()
        .zip(&slopes.forward)
        .map(|(b, f)| 0.5 * (b + f))
        .collect();
    Ok(GradientEstimate {
        gradient,
        valid: slopes.jump() <= kink_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    pub kink_tol: f64,
    pub flagged_nodes: Vec<usize>,
    /// Flagged over interior node count.
    pub fraction: f64,
    pub interior_nodes: usize,
    pub slopes: Vec<NodeSlopes>,
}

impl KinkReport {
    pub fn flagged_points<'a>(&'a self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.slopes.iter().map(|s| s.point.as_slice())
    }
}

/// Flags interior nodes whose forward and backward slopes differ by more than
/// `kink_tol` on some axis (default [`default_kink_tol`]).
pub fn classify_kinks(grid: &ValueGrid, kink_tol: Option<f64>) -> Result<KinkReport> {
    if grid.nodes_per_axis() < MIN_KINK_RESOLUTION {
        return Err(Error::Precondition(format!(
            "kink classification needs at least {MIN_KINK_RESOLUTION} nodes per axis, got {}",
            grid.nodes_per_axis()
        )));
    }
    let tol = kink_tol.unwrap_or_else(|| default_kink_tol(grid));
    let slopes: Vec<NodeSlopes> = (0..grid.len())
        .filter_map(|k| NodeSlopes::of(grid, k))
        .filter(|s| s.jump() > tol)
        .collect();
    let interior = grid.interior_count();
    Ok(KinkReport {
        kink_tol: tol,
        flagged_nodes: slopes.iter().map(|s| s.node).collect(),
        fraction: slopes.len() as f64 / interior as f64,
        interior_nodes: interior,
        slopes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSchedule {
    /// Length `t0 |d|` of the first step.
    pub step: f64,
    /// Richardson levels.
    pub levels: usize,
    /// Retries with a 100x smaller step when consecutive extrapolants disagree.
    pub retries: usize,
    pub consistency_tol: f64,
}

impl Default for DirectionalSchedule {
    fn default() -> Self {
        DirectionalSchedule {
            step: 1e-3,
            levels: 2,
            retries: 3,
            consistency_tol: 1e-6,
        }
    }
}

/// One-sided `lim_{t -> 0+} (V(x + t d) - V(x)) / t` for an arbitrary value
/// oracle, with Richardson extrapolation over `t_k = t0 2^-k`.
///
/// `feasible` decides whether `x + t d` can be evaluated. If the extrapolants
/// of the last two levels disagree (a kink within reach of the first step) the
/// step shrinks and the estimate is redone.
pub fn directional_derivative_with<V, F>(
    value: V,
    feasible: F,
    x: &[f64],
    d: &[f64],
    sched: &DirectionalSchedule,
) -> Result<f64>
where
    V: Fn(&[f64]) -> Result<f64>,
    F: Fn(&[f64]) -> bool,
{
    let norm = d.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::input("direction must be nonzero and finite"));
    }
    if sched.levels == 0 || !(sched.step > 0.0) {
        return Err(Error::input("invalid directional schedule"));
    }
    let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };

    let mut t0 = sched.step / norm;
    let mut shrink = 0;
    while !feasible(&at(t0)) {
        t0 *= 0.5;
        shrink += 1;
        if shrink > 40 {
            return Err(Error::input(format!(
                "direction {d:?} is infeasible at {x:?}"
            )));
        }
    }

    let v0 = value(x)?;
    let mut estimate = f64::NAN;
    for _ in 0..=sched.retries {
        // tableau[j] = quotients at t0 2^-j, extrapolated in place per level
        let mut table: Vec<f64> = (0..=sched.levels)
            .map(|j| {
                let t = t0 / f64::from(1u32 << j);
                value(&at(t)).map(|v| (v - v0) / t)
            })
            .collect::<Result<_>>()?;
        let mut prev_last = f64::NAN;
        for level in 1..=sched.levels {
            let factor = f64::from(1u32 << level);
            prev_last = *table.last().unwrap();
            table = table
                .windows(2)
                .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
                .collect();
        }
        estimate = table[0];
        let settled = sched.levels == 0
            || (estimate - prev_last).abs() <= sched.consistency_tol * estimate.abs().max(1.0);
        if settled {
            break;
        }
        t0 *= 1e-2;
    }
    Ok(estimate)
}

/// One-sided directional derivative `V'(x; d)` of the problem's value function.
pub fn directional_derivative(
    problem: &Problem,
    x: &[f64],
    d: &[f64],
    sched: &DirectionalSchedule,
    cfg: &SolveConfig,
) -> Result<f64> {
    problem.domain().check_point(x, "anchor")?;
    if d.len() != problem.dim() {
        return Err(Error::input("direction has the wrong dimension"));
    }
    directional_derivative_with(
        |p| solve(problem, p, cfg).map(|s| s.value),
        |p| problem.domain().contains(p),
        x,
        d,
        sched,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub sup_error: f64,
}

/// Rebuilds a one-dimensional `V` on `[0, M]` from `V(0)` and a cumulative
/// trapezoid integral of its finite-difference derivative.
pub fn integral_reconstruct(grid: &ValueGrid) -> Result<Reconstruction> {
    if grid.dim() != 1 || grid.topology() != Topology::Box {
        return Err(Error::Unsupported(
            "integral reconstruction is one-dimensional (interval domains only)".into(),
        ));
    }
    if grid.domain().lo()[0] != 0.0 {
        return Err(Error::Precondition(
            "integral reconstruction needs a domain starting at 0".into(),
        ));
    }
    let h = grid.spacing(0);
    let v = grid.values();
    let m = v.len();
    let slope: Vec<f64> = (0..m)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / h
            } else if i == m - 1 {
                (v[m - 1] - v[m - 2]) / h
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect();
    let mut reconstructed = Vec::with_capacity(m);
    let mut acc = v[0];
    reconstructed.push(acc);
    for i in 1..m {
        acc += 0.5 * (slope[i - 1] + slope[i]) * h;
        reconstructed.push(acc);
    }
    let sup_error = reconstructed
        .iter()
        .zip(v)
        .map(|(r, x)| (r - x).abs())
        .fold(0.0, f64::max);
    Ok(Reconstruction {
        points: (0..m).map(|i| grid.axis_coord(0, i)).collect(),
        values: v.to_vec(),
        reconstructed,
        sup_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub monotone: bool,
    /// `max (V(x) - V(x'))` over pairs where `x'` strictly dominates `x`; `<= 0` is clean.
    pub worst_violation: f64,
    pub violations: usize,
    /// `(dominated, dominating)` node coordinates of the worst pair.
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub v_tol: f64,
}

/// Checks `V(x') >= V(x) - v_tol` whenever `x'` strictly dominates `x`
/// coordinate-wise, over all node pairs. Requires a separable cost whose
/// curves vanish on negative moves.
pub fn monotonicity_check(problem: &Problem, grid: &ValueGrid, v_tol: f64) -> Result<MonotonicityReport> {
    if !problem.cost().is_one_sided_separable() {
        return Err(Error::Precondition(
            "monotonicity needs a separable cost with g_i(z) = 0 for z < 0 and g_i >= 0".into(),
        ));
    }
    if grid.topology() != Topology::Box || grid.domain() != problem.domain() {
        return Err(Error::input("grid does not cover the problem domain"));
    }
    // prefix maxima over the componentwise-lower orthant, with argmax
    let mut best: Vec<(f64, usize)> = grid.values().iter().copied().zip(0..).collect();
    for axis in 0..grid.dim() {
        for k in 0..grid.len() {
            if let Some(j) = grid.neighbor(k, axis, -1) {
                if best[j].0 > best[k].0 {
                    best[k] = best[j];
                }
            }
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut violations = 0;
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        if idx.iter().any(|&i| i == 0) {
            continue;
        }
        let below: Vec<usize> = idx.iter().map(|&i| i - 1).collect();
        let (vmax, arg) = best[grid.flat_index(&below)];
        let gap = vmax - grid.value(k);
        if gap > v_tol {
            violations += 1;
        }
        if gap > worst {
            worst = gap;
            worst_pair = Some((grid.coord(arg), grid.coord(k)));
        }
    }
    Ok(MonotonicityReport {
        monotone: violations == 0,
        worst_violation: if worst.is_finite() { worst } else { 0.0 },
        violations,
        worst_pair,
        v_tol,
    })
}
