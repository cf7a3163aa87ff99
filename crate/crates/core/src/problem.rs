use crate::cost::CostSpec;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::payoff::{regularize, PiecewisePayoff, RegularizedPayoff};

/// A positioning choice problem `max_{y in C} f(y) - g(x, y)`.
///
/// The regularized payoff is built once at construction; every objective
/// evaluation goes through it so the supremum is always attained.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    payoff: PiecewisePayoff,
    cost: CostSpec,
    domain: BoxDomain,
    regularized: RegularizedPayoff,
}

impl Problem {
    pub fn new(payoff: PiecewisePayoff, cost: CostSpec, domain: BoxDomain) -> Result<Self> {
        if payoff.domain() != &domain {
            return Err(Error::input(
                "payoff was built for a different domain than the problem",
            ));
        }
        cost.validate(domain.dim())?;
        let regularized = regularize(&payoff);
        Ok(Problem {
            payoff,
            cost,
            domain,
            regularized,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn payoff(&self) -> &PiecewisePayoff {
        &self.payoff
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn regularized(&self) -> &RegularizedPayoff {
        &self.regularized
    }

    /// Whether the payoff carries spikes that break the regularity assumption
    /// under which maxima are guaranteed to admit Dini supergradients.
    pub fn regularity_violated(&self) -> bool {
        self.regularized.regularity_violated()
    }

    /// `h(x, y) = f*(y) - g(x, y)` with domain checks on both points.
    pub fn evaluate_objective(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.domain.check_point(x, "anchor")?;
        self.domain.check_point(y, "choice")?;
        Ok(self.objective(x, y))
    }

    /// Unchecked objective; `y` must lie in the domain.
    pub(crate) fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let f = self
            .regularized
            .eval(y)
            .expect("choice point outside every payoff region");
        f - self.cost.eval(x, y)
    }

    /// `h(x, y)` or `None` when `y` leaves the box.
    pub(crate) fn objective_opt(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        if !self.domain.contains(y) {
            return None;
        }
        self.regularized.eval(y).map(|f| f - self.cost.eval(x, y))
    }

    /// `sup |f| + max |g|`, the a-priori bound on `|h|`.
    pub fn objective_bound(&self) -> f64 {
        self.payoff.bound() + self.cost.max_over(&self.domain)
    }
}
