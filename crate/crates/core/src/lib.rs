//! Value functions of positioning choice problems `max_{y in C} f(y) - g(x, y)`
//! with discontinuous payoffs `f`.
//!
//! The crate solves for `V(x)` and the maximizer set, estimates upper Dini
//! derivatives to check first-order conditions at discontinuous maxima, and
//! checks envelope properties of `V` on sampled grids: Lipschitz bounds,
//! kink sets that thin out under refinement, directional derivatives, integral
//! reconstruction and monotonicity.

pub mod cli;
pub mod cost;
pub mod dini;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod manifold;
pub mod payoff;
pub mod plane_bound;
pub mod problem;
pub mod problem_file;
pub mod report;
pub mod scenarios;
pub mod solver;

pub use cost::{CostCurve, CostSpec};
pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use grid::{Topology, ValueGrid};
pub use payoff::{regularize, AffineExpr, Piece, PiecewisePayoff, Region, RegularizedPayoff, Spike};
pub use problem::Problem;
pub use dini::{fonc_check, upper_dini, DiniClass, DiniEstimate, DiniSchedule, FoncReport};
pub use envelope::{
    classify_kinks, directional_derivative, fd_gradient, integral_reconstruct, lipschitz_estimate,
    monotonicity_check,
};
pub use manifold::{ring_distance, ring_regularize_and_solve, RingDomain, RingMetric, RingProblem};
pub use plane_bound::{plane_bound_solve, PlaneBoundProblem};
pub use problem_file::{export_problem, parse_problem};
pub use scenarios::{build as build_scenario, list_scenarios, ProblemKind, Scenario};
pub use solver::{solve, value_function, Solution, SolveConfig};
