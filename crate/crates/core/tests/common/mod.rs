//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use poschoice::{Problem, ProblemKind, RingProblem};

/// `max h(x, y)` over `points` uniformly spaced choices on the 1-D box, plus the anchor.
pub fn brute_1d(problem: &Problem, x: f64, points: usize) -> f64 {
    let (lo, hi) = (problem.domain().lo()[0], problem.domain().hi()[0]);
    let n = points - 1;
    (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + i as f64 * (hi - lo) / n as f64
            }
        })
        .chain(std::iter::once(x))
        .map(|y| problem.evaluate_objective(&[x], &[y]).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ring sweep over `[0, L)` plus the anchor.
pub fn brute_ring(problem: &RingProblem, x: f64, points: usize) -> f64 {
    let l = problem.domain().circumference();
    (0..points)
        .map(|i| i as f64 * l / points as f64)
        .chain(std::iter::once(x))
        .map(|y| problem.objective(x, y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lattice with `per_axis` points per axis on a 2-D box.
pub fn brute_2d(problem: &Problem, x: &[f64], per_axis: usize) -> f64 {
    let d = problem.domain();
    let n = per_axis - 1;
    let coord = |axis: usize, i: usize| {
        if i == n {
            d.hi()[axis]
        } else {
            d.lo()[axis] + i as f64 * d.width(axis) / n as f64
        }
    };
    let mut best = problem.evaluate_objective(x, x).unwrap();
    for j in 0..=n {
        let y1 = coord(1, j);
        for i in 0..=n {
            let y = [coord(0, i), y1];
            best = best.max(problem.evaluate_objective(x, &y).unwrap());
        }
    }
    best
}

/// One-dimensional brute force for any single-coordinate problem kind.
pub fn brute_kind_1d(problem: &ProblemKind, x: f64, points: usize) -> f64 {
    match problem {
        ProblemKind::Box(p) => brute_1d(p, x, points),
        ProblemKind::Ring(r) => brute_ring(r, x, points),
        ProblemKind::PlaneBound(pb) => brute_1d(pb.plane_problem(), x, points),
    }
}
