//! Choice problems on a ring: the interval `[0, L)` with its endpoints glued.

use serde::{Deserialize, Serialize};

use crate::dini::ChoiceObjective;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::grid::{Topology, ValueGrid};
use crate::payoff::{regularize, PiecewisePayoff, RegularizedPayoff, POINT_EPS};
use crate::solver::{Solution, SolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingDomain {
    circumference: f64,
}

impl RingDomain {
    pub fn new(circumference: f64) -> Result<Self> {
        if !(circumference > 0.0) || !circumference.is_finite() {
            return Err(Error::param("circumference", "must be positive and finite"));
        }
        Ok(RingDomain { circumference })
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn check(&self, x: f64, what: &str) -> Result<()> {
        if !(0.0..self.circumference).contains(&x) {
            return Err(Error::input(format!(
                "{what} {x} is not a ring coordinate in [0, {})",
                self.circumference
            )));
        }
        Ok(())
    }

    /// Reduces any real to its coordinate in `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.circumference);
        if r >= self.circumference {
            0.0
        } else {
            r
        }
    }

    /// Arc length of the shorter way round.
    pub fn distance(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, "point")?;
        self.check(y, "point")?;
        Ok(self.geodesic(x, y))
    }

    fn geodesic(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        d.min(self.circumference - d)
    }

    pub fn as_box(&self) -> BoxDomain {
        BoxDomain::new(vec![0.0], vec![self.circumference]).expect("positive circumference")
    }
}

/// Geodesic distance on the default ring `L = 2`.
pub fn ring_distance(x: f64, y: f64) -> Result<f64> {
    RingDomain::new(2.0)?.distance(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingMetric {
    #[default]
    Geodesic,
    /// `|y - x|` in the chart `[0, L)`, ignoring the glue.
    Chart,
}

/// `max_{y in ring} f*(y) - scale * d(x, y)` with a one-dimensional payoff
/// given on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingProblem {
    domain: RingDomain,
    payoff: PiecewisePayoff,
    regularized: RegularizedPayoff,
    metric: RingMetric,
    scale: f64,
}

impl RingProblem {
    pub fn new(payoff: PiecewisePayoff, domain: RingDomain, metric: RingMetric, scale: f64) -> Result<Self> {
        if payoff.domain() != &domain.as_box() {
            return Err(Error::input(format!(
                "ring payoff must be defined on [0, {}]",
                domain.circumference()
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param("scale", "must be positive and finite"));
        }
        Ok(RingProblem {
            regularized: regularize(&payoff),
            domain,
            payoff,
            metric,
            scale,
        })
    }

    pub fn domain(&self) -> &RingDomain {
        &self.domain
    }

    pub fn payoff(&self) -> &PiecewisePayoff {
        &self.payoff
    }

    pub fn metric(&self) -> RingMetric {
        self.metric
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_metric(&self, metric: RingMetric) -> Self {
        RingProblem {
            metric,
            ..self.clone()
        }
    }

    pub fn regularity_violated(&self) -> bool {
        self.regularized.regularity_violated()
    }

    /// Regularized payoff on the ring. The glued point takes the larger of
    /// the values approached from either side of the glue.
    pub fn payoff_at(&self, y: f64) -> f64 {
        let l = self.domain.circumference();
        let y = self.domain.wrap(y);
        let at = |p: f64| self.regularized.eval(&[p]).expect("payoff covers [0, L]");
        if y == 0.0 {
            at(0.0).max(at(l))
        } else {
            at(y)
        }
    }

    pub fn cost(&self, x: f64, y: f64) -> f64 {
        let d = match self.metric {
            RingMetric::Geodesic => self.domain.geodesic(x, y),
            RingMetric::Chart => (y - x).abs(),
        };
        self.scale * d
    }

    pub fn objective(&self, x: f64, y: f64) -> f64 {
        let y = self.domain.wrap(y);
        self.payoff_at(y) - self.cost(x, y)
    }

    fn is_glue_discontinuity(&self, y: f64) -> bool {
        if y != 0.0 {
            return self.payoff.is_discontinuity(&[y]);
        }
        let l = self.domain.circumference();
        let right = self.payoff.eval(&[0.0]).expect("payoff covers 0");
        let left = self.payoff.limits_at(&[l]).fold(f64::NEG_INFINITY, f64::max);
        self.payoff.is_discontinuity(&[0.0]) || (right - left).abs() > POINT_EPS
    }
}

/// Arc of maximizers from `lo` to `hi` (`hi` may exceed `L` when the arc
/// crosses the glue). Endpoints are maximizers only when flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_attained: bool,
    pub hi_attained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSolution {
    pub anchor: f64,
    pub value: f64,
    /// Maximizers that are not inside any reported interval.
    pub isolated: Vec<f64>,
    pub intervals: Vec<RingInterval>,
    /// Isolated maximizers plus the attained endpoints of every interval
    /// (its midpoint when neither is attained), wrapped into `[0, L)`.
    pub representatives: Vec<f64>,
    /// True when the maximizer set contains a continuum.
    pub interval: bool,
    pub attained_at_discontinuity: Vec<bool>,
}

impl RingSolution {
    pub fn into_solution(self) -> Solution {
        Solution {
            anchor: vec![self.anchor],
            value: self.value,
            argmax_set: self.representatives.iter().map(|&r| vec![r]).collect(),
            attained_at_discontinuity: self.attained_at_discontinuity,
        }
    }
}

/// Solves the ring problem at `x`.
///
/// On every arc between consecutive breakpoints (payoff boundaries, spikes,
/// the anchor, its antipode and the glue) the objective is affine, so its
/// supremum over the arc is reached at an endpoint. The regularized payoff
/// dominates the one-sided limits there. The exception is the glue under the
/// chart metric: the limit from below `L` would be paid at cost `|L - x|`,
/// which no ring point realizes, so it is not counted. Flat arcs are reported
/// as intervals.
pub fn ring_regularize_and_solve(problem: &RingProblem, x: f64, cfg: &SolveConfig) -> Result<RingSolution> {
    cfg.validate()?;
    let ring = problem.domain();
    ring.check(x, "anchor")?;
    let l = ring.circumference();

    let mut breaks: Vec<f64> = vec![0.0, l, x, ring.wrap(x + 0.5 * l)];
    breaks.extend(problem.payoff().boundary_coords()[0].iter().copied());
    breaks.extend(problem.payoff().spikes().iter().map(|s| s.point[0]));
    breaks.retain(|b| (0.0..=l).contains(b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= POINT_EPS);

    let values: Vec<f64> = breaks.iter().map(|&b| problem.objective(x, b)).collect();
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let attains = |v: f64| v >= value - cfg.v_tol;

    let mut intervals: Vec<RingInterval> = Vec::new();
    for (w, vals) in breaks.windows(2).zip(values.windows(2)) {
        // affine inside the arc: flat iff two interior points attain
        let third = (w[1] - w[0]) / 3.0;
        if !(attains(problem.objective(x, w[0] + third)) && attains(problem.objective(x, w[1] - third))) {
            continue;
        }
        let (lo_attained, hi_attained) = (attains(vals[0]), attains(vals[1]));
        match intervals.last_mut() {
            Some(last) if last.hi == w[0] => {
                last.hi = w[1];
                last.hi_attained = hi_attained;
            }
            _ => intervals.push(RingInterval {
                lo: w[0],
                hi: w[1],
                lo_attained,
                hi_attained,
            }),
        }
    }
    // an arc ending at the glue continues into one starting at 0
    if intervals.len() > 1 && intervals[0].lo == 0.0 && intervals.last().unwrap().hi == l {
        let first = intervals.remove(0);
        let last = intervals.last_mut().unwrap();
        last.hi = l + first.hi;
        last.hi_attained = first.hi_attained;
    }

    let inside = |p: f64| {
        intervals.iter().any(|iv| {
            let span = iv.lo - POINT_EPS..=iv.hi + POINT_EPS;
            span.contains(&p) || span.contains(&(p + l))
        })
    };
    let mut isolated: Vec<f64> = breaks
        .iter()
        .zip(&values)
        .filter(|(_, &v)| attains(v))
        .map(|(&b, _)| ring.wrap(b))
        .filter(|&b| !inside(b))
        .collect();
    isolated.sort_by(f64::total_cmp);
    isolated.dedup_by(|a, b| (*a - *b).abs() <= cfg.y_tol);

    let mut representatives: Vec<f64> = isolated.clone();
    for iv in &intervals {
        if iv.lo_attained {
            representatives.push(ring.wrap(iv.lo));
        }
        if iv.hi_attained {
            representatives.push(ring.wrap(iv.hi));
        }
        if !(iv.lo_attained || iv.hi_attained) {
            representatives.push(ring.wrap(0.5 * (iv.lo + iv.hi)));
        }
    }
    representatives.sort_by(f64::total_cmp);
    representatives.dedup_by(|a, b| (*a - *b).abs() <= cfg.y_tol);

    Ok(RingSolution {
        anchor: x,
        value,
        attained_at_discontinuity: representatives
            .iter()
            .map(|&r| problem.is_glue_discontinuity(r))
            .collect(),
        interval: !intervals.is_empty(),
        isolated,
        intervals,
        representatives,
    })
}

/// `V` at the `cells` equally spaced ring nodes `k L / cells`.
pub fn ring_value_function(problem: &RingProblem, cells: usize, cfg: &SolveConfig) -> Result<ValueGrid> {
    cfg.validate()?;
    Ok(
        ValueGrid::build(problem.domain().as_box(), cells, Topology::Ring, |x| {
            ring_regularize_and_solve(problem, x[0], cfg).map(|s| s.value)
        })?
        .with_config(cfg.clone()),
    )
}

/// Anchors where the chart and geodesic readings of the cost disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDifference {
    pub anchor: f64,
    pub geodesic_value: f64,
    pub chart_value: f64,
    pub geodesic_argmax: Vec<f64>,
    pub chart_argmax: Vec<f64>,
}

pub fn compare_metrics(problem: &RingProblem, anchors: &[f64], cfg: &SolveConfig) -> Result<Vec<MetricDifference>> {
    let geo = problem.with_metric(RingMetric::Geodesic);
    let chart = problem.with_metric(RingMetric::Chart);
    let mut out = Vec::new();
    for &x in anchors {
        let a = ring_regularize_and_solve(&geo, x, cfg)?;
        let b = ring_regularize_and_solve(&chart, x, cfg)?;
        let same_set = a.representatives.len() == b.representatives.len()
            && a
                .representatives
                .iter()
                .zip(&b.representatives)
                .all(|(p, q)| (p - q).abs() <= cfg.y_tol);
        if (a.value - b.value).abs() > cfg.v_tol || !same_set {
            out.push(MetricDifference {
                anchor: x,
                geodesic_value: a.value,
                chart_value: b.value,
                geodesic_argmax: a.representatives,
                chart_argmax: b.representatives,
            });
        }
    }
    Ok(out)
}

/// A ring problem with its anchor fixed. Every point is interior and steps
/// wrap through the glue.
pub struct RingAnchored<'a> {
    pub problem: &'a RingProblem,
    pub anchor: f64,
}

impl ChoiceObjective for RingAnchored<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, y: &[f64]) -> Option<f64> {
        y[0].is_finite().then(|| self.problem.objective(self.anchor, y[0]))
    }

    fn is_interior(&self, _y: &[f64]) -> bool {
        true
    }
}
