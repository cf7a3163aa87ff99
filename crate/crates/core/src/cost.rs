//! Movement costs `g(x, y)`.

use serde::{Deserialize, Serialize};

use crate::domain::{euclidean, BoxDomain};
use crate::error::{Error, Result};

/// One-dimensional cost curve for separable costs, applied to `y_i - x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostCurve {
    /// `slope * max(0, z)`.
    Hinge { slope: f64 },
    /// Linear interpolation through `(z, value)` knots, extended linearly
    /// beyond the first and last knot.
    PiecewiseAffine { knots: Vec<[f64; 2]> },
}

impl CostCurve {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            CostCurve::Hinge { slope } => slope * z.max(0.0),
            CostCurve::PiecewiseAffine { knots } => {
                if knots.len() == 1 {
                    return knots[0][1];
                }
                let seg = knots
                    .windows(2)
                    .position(|w| z <= w[1][0])
                    .unwrap_or(knots.len() - 2);
                let [z0, v0] = knots[seg];
                let [z1, v1] = knots[seg + 1];
                v0 + (v1 - v0) * (z - z0) / (z1 - z0)
            }
        }
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        match self {
            CostCurve::Hinge { slope } => slope.abs(),
            CostCurve::PiecewiseAffine { knots } => knots
                .windows(2)
                .map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `g(z) = 0` for every `z < 0` and `g >= 0` everywhere.
    pub fn is_one_sided(&self) -> bool {
        match self {
            CostCurve::Hinge { slope } => *slope >= 0.0,
            CostCurve::PiecewiseAffine { knots } => {
                let left_slope = if knots.len() >= 2 {
                    (knots[1][1] - knots[0][1]) / (knots[1][0] - knots[0][0])
                } else {
                    0.0
                };
                left_slope == 0.0
                    && knots.iter().filter(|k| k[0] <= 0.0).all(|k| k[1] == 0.0)
                    && self.eval(0.0) == 0.0
                    && knots.iter().all(|k| k[1] >= 0.0)
            }
        }
    }

    fn check(&self, field: &str) -> Result<()> {
        match self {
            CostCurve::Hinge { slope } => {
                if !slope.is_finite() || *slope < 0.0 {
                    return Err(Error::input(format!(
                        "{field}.slope must be finite and non-negative"
                    )));
                }
            }
            CostCurve::PiecewiseAffine { knots } => {
                if knots.is_empty() {
                    return Err(Error::input(format!("{field}.knots must not be empty")));
                }
                if knots.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::input(format!("{field}.knots must be finite")));
                }
                for w in knots.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::input(format!(
                            "{field}.knots must have strictly increasing abscissae"
                        )));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::input(format!("{field} must be non-decreasing")));
                    }
                }
                if self.eval(0.0).abs() > 1e-12 {
                    return Err(Error::input(format!("{field} must vanish at zero")));
                }
            }
        }
        Ok(())
    }
}

/// The cost of moving from anchor `x` to choice `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    /// `alpha * ||y - x||` (Euclidean).
    ScaledNorm { alpha: f64 },
    /// `sum_i g_i(y_i - x_i)`.
    Separable { curves: Vec<CostCurve> },
    /// `coefficient * ||y - x||^power`, `power > 1`.
    ConvexRadial { coefficient: f64, power: f64 },
}

impl CostSpec {
    pub fn scaled_norm(alpha: f64) -> Self {
        CostSpec::ScaledNorm { alpha }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            CostSpec::ScaledNorm { alpha } => {
                if !alpha.is_finite() || *alpha < 0.0 {
                    return Err(Error::input("cost.alpha must be finite and non-negative"));
                }
            }
            CostSpec::Separable { curves } => {
                if curves.len() != dim {
                    return Err(Error::input(format!(
                        "cost.curves: expected {dim} curves, got {}",
                        curves.len()
                    )));
                }
                for (i, c) in curves.iter().enumerate() {
                    c.check(&format!("cost.curves[{i}]"))?;
                }
            }
            CostSpec::ConvexRadial { coefficient, power } => {
                if !coefficient.is_finite() || *coefficient <= 0.0 {
                    return Err(Error::input("cost.coefficient must be positive"));
                }
                if !power.is_finite() || *power <= 1.0 {
                    return Err(Error::input("cost.power must exceed 1"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            CostSpec::ScaledNorm { alpha } => alpha * euclidean(x, y),
            CostSpec::Separable { curves } => curves
                .iter()
                .zip(x.iter().zip(y))
                .map(|(c, (a, b))| c.eval(b - a))
                .sum(),
            CostSpec::ConvexRadial { coefficient, power } => {
                coefficient * euclidean(x, y).powf(*power)
            }
        }
    }

    /// Lipschitz constant of `x -> g(x, y)` on the box, uniformly in `y`.
    pub fn lipschitz_in_anchor(&self, domain: &BoxDomain) -> f64 {
        match self {
            CostSpec::ScaledNorm { alpha } => *alpha,
            CostSpec::Separable { curves } => curves
                .iter()
                .map(|c| c.lipschitz().powi(2))
                .sum::<f64>()
                .sqrt(),
            CostSpec::ConvexRadial { coefficient, power } => {
                coefficient * power * domain.diameter().powf(power - 1.0)
            }
        }
    }

    /// `max |g|` over `C x C`.
    pub fn max_over(&self, domain: &BoxDomain) -> f64 {
        match self {
            CostSpec::ScaledNorm { alpha } => alpha * domain.diameter(),
            CostSpec::Separable { curves } => curves
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let w = domain.width(i);
                    c.eval(w).abs().max(c.eval(-w).abs())
                })
                .sum(),
            CostSpec::ConvexRadial { coefficient, power } => {
                coefficient * domain.diameter().powf(*power)
            }
        }
    }

    /// Separable with every curve vanishing on negative moves.
    pub fn is_one_sided_separable(&self) -> bool {
        match self {
            CostSpec::Separable { curves } => curves.iter().all(CostCurve::is_one_sided),
            _ => false,
        }
    }
}
