//! Named example problems with closed-form value functions.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::grid::{Topology, ValueGrid};
use crate::manifold::{ring_regularize_and_solve, ring_value_function, RingDomain, RingMetric, RingProblem};
use crate::payoff::{AffineExpr, Piece, PiecewisePayoff, Region, Spike};
use crate::plane_bound::{plane_bound_solve, PlaneBoundProblem};
use crate::problem::Problem;
use crate::solver::{solve, value_function, Solution, SolveConfig};

/// Any problem the toolkit can solve.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    Box(Problem),
    Ring(RingProblem),
    PlaneBound(PlaneBoundProblem),
}

impl ProblemKind {
    pub fn dim(&self) -> usize {
        match self {
            ProblemKind::Box(p) => p.dim(),
            ProblemKind::Ring(_) => 1,
            ProblemKind::PlaneBound(p) => p.dim(),
        }
    }

    /// Where anchors live: the box, the ring chart `[0, L]`, or the anchors
    /// box of a plane-bound pair.
    pub fn anchor_domain(&self) -> BoxDomain {
        match self {
            ProblemKind::Box(p) => p.domain().clone(),
            ProblemKind::Ring(r) => r.domain().as_box(),
            ProblemKind::PlaneBound(p) => p.anchors().clone(),
        }
    }

    pub fn topology(&self) -> Topology {
        match self {
            ProblemKind::Ring(_) => Topology::Ring,
            _ => Topology::Box,
        }
    }

    /// The box problem whose value function is analysed: the problem itself,
    /// or the plane problem of a plane-bound pair.
    pub fn box_problem(&self) -> Option<&Problem> {
        match self {
            ProblemKind::Box(p) => Some(p),
            ProblemKind::Ring(_) => None,
            ProblemKind::PlaneBound(p) => Some(p.plane_problem()),
        }
    }

    pub fn regularity_violated(&self) -> bool {
        match self {
            ProblemKind::Box(p) => p.regularity_violated(),
            ProblemKind::Ring(r) => r.regularity_violated(),
            ProblemKind::PlaneBound(p) => p.bound_problem().regularity_violated(),
        }
    }

    pub fn solve(&self, x: &[f64], cfg: &SolveConfig) -> Result<Solution> {
        match self {
            ProblemKind::Box(p) => solve(p, x, cfg),
            ProblemKind::Ring(r) => {
                if x.len() != 1 {
                    return Err(Error::input("ring anchors have one coordinate"));
                }
                Ok(ring_regularize_and_solve(r, x[0], cfg)?.into_solution())
            }
            ProblemKind::PlaneBound(p) => {
                p.anchors().check_point(x, "anchor")?;
                solve(p.plane_problem(), x, cfg)
            }
        }
    }

    /// `V` on a `cells`-per-axis grid over the anchor domain.
    pub fn value_grid(&self, cells: usize, cfg: &SolveConfig) -> Result<ValueGrid> {
        match self {
            ProblemKind::Box(p) => value_function(p, cells, cfg),
            ProblemKind::Ring(r) => ring_value_function(r, cells, cfg),
            ProblemKind::PlaneBound(p) => Ok(plane_bound_solve(p, cells, cfg)?.plane_grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub default: f64,
    pub constraint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub params: Vec<ParamSpec>,
    pub citation: String,
}

struct Entry {
    name: &'static str,
    params: &'static [(&'static str, f64, &'static str)],
    citation: &'static str,
}

const REGISTRY: &[Entry] = &[
    Entry {
        name: "step1d",
        params: &[("alpha", 2.0, "alpha > 1")],
        citation: "one-dimensional step payoff y 1{y >= 1} on [0, 2] with cost alpha |y - x|; \
                   three-branch value function with kinks at 1 - 1/alpha and 1",
    },
    Entry {
        name: "indicator2d",
        params: &[("alpha", 2.0, "alpha > 1")],
        citation: "two-dimensional quadrant indicator on [0, 2]^2 with cost alpha ||y - x||; \
                   kinks along the quadrant edges, their offsets and a circular arc",
    },
    Entry {
        name: "spike",
        params: &[],
        citation: "isolated spike f(1) = 1 on an otherwise zero payoff with cost |y - x|; \
                   V = 1 - |1 - x| although upper semicontinuity fails",
    },
    Entry {
        name: "ring",
        params: &[],
        citation: "ring example: [0, 2) with endpoints glued, payoff y 1{y >= 1}, \
                   geodesic cost; V = 1 + |1 - x|",
    },
    Entry {
        name: "plane_bound",
        params: &[("c", 1.0, "c >= 0"), ("p", 2.0, "p > 1")],
        citation: "unconstrained plane payoff c y dominating the step payoff c floor(y), \
                   cost |y - x|^p; V is a plane parallel to the payoff",
    },
];

pub fn list_scenarios() -> Vec<ScenarioInfo> {
    REGISTRY
        .iter()
        .map(|e| ScenarioInfo {
            name: e.name.into(),
            params: e
                .params
                .iter()
                .map(|&(name, default, constraint)| ParamSpec {
                    name: name.into(),
                    default,
                    constraint: constraint.into(),
                })
                .collect(),
            citation: e.citation.into(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub problem: ProblemKind,
    pub notes: String,
}

/// Builds a registered scenario; unspecified parameters take their defaults.
pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<Scenario> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.into()))?;
    let mut resolved = BTreeMap::new();
    for &(p, default, _) in entry.params {
        resolved.insert(p.to_string(), params.get(p).copied().unwrap_or(default));
    }
    if let Some(extra) = params.keys().find(|k| !resolved.contains_key(*k)) {
        return Err(Error::param(extra.clone(), format!("not a parameter of {name}")));
    }
    if let Some((k, _)) = resolved.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::param(k.clone(), "must be finite"));
    }
    let problem = match name {
        "step1d" => ProblemKind::Box(step1d(resolved["alpha"])?),
        "indicator2d" => ProblemKind::Box(indicator2d(resolved["alpha"])?),
        "spike" => ProblemKind::Box(spike()?),
        "ring" => ProblemKind::Ring(ring()?),
        "plane_bound" => ProblemKind::PlaneBound(plane_bound(resolved["c"], resolved["p"])?),
        _ => unreachable!("registry and builders agree"),
    };
    Ok(Scenario {
        name: name.into(),
        params: resolved,
        problem,
        notes: entry.citation.into(),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha <= 1.0 {
        return Err(Error::param("alpha", "alpha must exceed 1"));
    }
    Ok(())
}

fn interval(lo: f64, hi: f64) -> BoxDomain {
    BoxDomain::new(vec![lo], vec![hi]).expect("valid interval")
}

fn step_payoff(domain: &BoxDomain) -> Result<PiecewisePayoff> {
    PiecewisePayoff::new(
        domain,
        vec![
            Piece::new(Region::interval(0.0, true, 1.0, false), AffineExpr::constant(0.0)),
            Piece::new(Region::interval(1.0, true, 2.0, true), AffineExpr::new(0.0, vec![1.0])),
        ],
        vec![],
        None,
    )
}

pub fn step1d(alpha: f64) -> Result<Problem> {
    check_alpha(alpha)?;
    let c = interval(0.0, 2.0);
    Problem::new(step_payoff(&c)?, CostSpec::scaled_norm(alpha), c)
}

pub fn indicator2d(alpha: f64) -> Result<Problem> {
    check_alpha(alpha)?;
    let c = BoxDomain::cube(2, 0.0, 2.0)?;
    let f = PiecewisePayoff::new(
        &c,
        vec![
            Piece::new(
                Region {
                    lo: vec![0.0, 0.0],
                    hi: vec![1.0, 2.0],
                    lo_closed: vec![true, true],
                    hi_closed: vec![false, true],
                },
                AffineExpr::constant(0.0),
            ),
            Piece::new(
                Region {
                    lo: vec![1.0, 0.0],
                    hi: vec![2.0, 1.0],
                    lo_closed: vec![true, true],
                    hi_closed: vec![true, false],
                },
                AffineExpr::constant(0.0),
            ),
            Piece::new(Region::closed(vec![1.0, 1.0], vec![2.0, 2.0]), AffineExpr::constant(1.0)),
        ],
        vec![],
        None,
    )?;
    Problem::new(f, CostSpec::scaled_norm(alpha), c)
}

pub fn spike() -> Result<Problem> {
    let c = interval(0.0, 2.0);
    let f = PiecewisePayoff::new(
        &c,
        vec![Piece::new(Region::closed(vec![0.0], vec![2.0]), AffineExpr::constant(0.0))],
        vec![Spike {
            point: vec![1.0],
            value: 1.0,
        }],
        None,
    )?;
    Problem::new(f, CostSpec::scaled_norm(1.0), c)
}

pub fn ring() -> Result<RingProblem> {
    let r = RingDomain::new(2.0)?;
    RingProblem::new(step_payoff(&r.as_box())?, r, RingMetric::Geodesic, 1.0)
}

/// Optimal step length `r*` of the plane problem with slope `c` and cost `|y - x|^p`.
fn plane_step(c: f64, p: f64) -> f64 {
    (c / p).powf(1.0 / (p - 1.0))
}

pub fn plane_bound(c: f64, p: f64) -> Result<PlaneBoundProblem> {
    if c < 0.0 {
        return Err(Error::param("c", "must be non-negative"));
    }
    if p <= 1.0 {
        return Err(Error::param("p", "must exceed 1"));
    }
    let reach = plane_step(c, p);
    if !reach.is_finite() || reach > 1e6 {
        return Err(Error::param("c", "optimal step is too long for a finite window"));
    }
    let anchors = interval(0.0, 3.0);
    let hi = (3.0 + reach).ceil() + 3.0;
    let window = interval(-2.0, hi);
    let n_steps = (hi + 2.0) as i64;
    let pieces = (0..n_steps)
        .map(|i| {
            let k = (i - 2) as f64;
            Piece::new(
                Region::interval(k, true, k + 1.0, i + 1 == n_steps),
                AffineExpr::constant(c * k),
            )
        })
        .collect();
    let bound = PiecewisePayoff::new(&window, pieces, vec![], None)?;
    PlaneBoundProblem::new(
        AffineExpr::new(0.0, vec![c]),
        bound,
        CostSpec::ConvexRadial {
            coefficient: 1.0,
            power: p,
        },
        anchors,
        window,
    )
}

const TIE: f64 = 1e-12;

impl Scenario {
    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// Closed-form `V(x)`.
    pub fn value_oracle(&self, x: &[f64]) -> f64 {
        match self.name.as_str() {
            "step1d" => {
                let a = self.param("alpha");
                let x = x[0];
                if x <= 1.0 - 1.0 / a {
                    0.0
                } else if x < 1.0 {
                    1.0 - a * (1.0 - x)
                } else {
                    x
                }
            }
            "indicator2d" => (1.0 - self.param("alpha") * quadrant_distance(x)).max(0.0),
            "spike" => 1.0 - (1.0 - x[0]).abs(),
            "ring" => 1.0 + (1.0 - x[0]).abs(),
            "plane_bound" => {
                let (c, p) = (self.param("c"), self.param("p"));
                let r = plane_step(c, p);
                c * x[0] + c * r - r.powf(p)
            }
            _ => unreachable!("registry scenario"),
        }
    }

    /// Closed-form maximizer set, lexicographically sorted. Ring continua are
    /// given by the representatives the ring solver reports.
    pub fn argmax_oracle(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let mut set: Vec<Vec<f64>> = match self.name.as_str() {
            "step1d" => {
                let k = 1.0 - 1.0 / self.param("alpha");
                let x = x[0];
                if (x - k).abs() <= TIE {
                    vec![vec![x], vec![1.0]]
                } else if x < k || x >= 1.0 {
                    vec![vec![x]]
                } else {
                    vec![vec![1.0]]
                }
            }
            "indicator2d" => {
                let a = self.param("alpha");
                let proj: Vec<f64> = x.iter().map(|&v| v.max(1.0)).collect();
                let gain = 1.0 - a * quadrant_distance(x);
                if proj == x || gain > TIE {
                    vec![proj]
                } else if gain < -TIE {
                    vec![x.to_vec()]
                } else {
                    vec![x.to_vec(), proj]
                }
            }
            "spike" => {
                let x = x[0];
                if (1.0 - x).abs() >= 1.0 - TIE {
                    vec![vec![x], vec![1.0]]
                } else {
                    vec![vec![1.0]]
                }
            }
            "ring" => {
                if x[0] < 1.0 {
                    vec![vec![0.0]]
                } else {
                    vec![vec![0.0], vec![x[0]]]
                }
            }
            "plane_bound" => vec![vec![x[0] + plane_step(self.param("c"), self.param("p"))]],
            _ => return None,
        };
        set.sort_by(|a, b| crate::solver::lex_cmp(a, b));
        set.dedup();
        Some(set)
    }

    /// `count` anchors drawn uniformly from the anchor domain (ring anchors
    /// from `[0, L)`), reproducible for a given seed.
    pub fn sample_anchors(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = self.problem.anchor_domain();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                (0..d.dim())
                    .map(|i| rng.gen_range(d.lo()[i]..d.hi()[i]))
                    .collect()
            })
            .collect()
    }
}

/// Euclidean distance from `x` to the quadrant `[1, inf)^2`.
fn quadrant_distance(x: &[f64]) -> f64 {
    x.iter().map(|&v| (1.0 - v).max(0.0).powi(2)).sum::<f64>().sqrt()
}
