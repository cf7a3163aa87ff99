//! Piecewise-affine payoffs over axis-aligned regions, and their upper
//! regularization.
//!
//! A payoff is a list of pieces whose regions partition the domain box. Each
//! region is a sub-box with its own open/closed flag per face, which fixes
//! which piece owns a boundary point. Optional spikes override the value at
//! isolated points.
//!
//! The regularized payoff assigns every point the maximum of its own value and
//! the limits from every piece whose closure contains it. Because each piece is
//! affine (hence continuous on its closure), the limit from a piece is just its
//! expression evaluated at the point.

use serde::{Deserialize, Serialize};

use crate::domain::{corners_of, BoxDomain};
use crate::error::{Error, Result};

/// Coordinates closer than this are treated as the same point when matching
/// spikes and comparing limit values.
pub const POINT_EPS: f64 = 1e-12;

/// `c0 + c . y`. An empty coefficient vector is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub constant: f64,
    #[serde(default)]
    pub coeffs: Vec<f64>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        AffineExpr {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn new(constant: f64, coeffs: Vec<f64>) -> Self {
        AffineExpr { constant, coeffs }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Gradient padded to `dim` entries.
    pub fn gradient(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| self.coeffs.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub(crate) fn check(&self, dim: usize, field: &str) -> Result<()> {
        if !self.coeffs.is_empty() && self.coeffs.len() != dim {
            return Err(Error::input(format!(
                "{field}: expected {dim} coefficients, got {}",
                self.coeffs.len()
            )));
        }
        if !self.constant.is_finite() || self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::input(format!("{field}: coefficients must be finite")));
        }
        Ok(())
    }
}

/// An axis-aligned sub-box with per-face open/closed flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lo_closed: Vec<bool>,
    pub hi_closed: Vec<bool>,
}

impl Region {
    /// Region with every face closed.
    pub fn closed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let n = lo.len();
        Region {
            lo,
            hi,
            lo_closed: vec![true; n],
            hi_closed: vec![true; n],
        }
    }

    /// `[lo, hi)` on every axis.
    pub fn half_open(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let n = lo.len();
        Region {
            lo,
            hi,
            lo_closed: vec![true; n],
            hi_closed: vec![false; n],
        }
    }

    pub fn interval(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Region {
            lo: vec![lo],
            hi: vec![hi],
            lo_closed: vec![lo_closed],
            hi_closed: vec![hi_closed],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        (0..self.dim()).all(|i| {
            let v = y[i];
            let above = if self.lo_closed[i] { v >= self.lo[i] } else { v > self.lo[i] };
            let below = if self.hi_closed[i] { v <= self.hi[i] } else { v < self.hi[i] };
            above && below
        })
    }

    pub fn closure_contains(&self, y: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= y[i] && y[i] <= self.hi[i])
    }

    /// Nearest point of the closed region to `x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| x[i].clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        corners_of(&self.lo, &self.hi)
    }

    fn check(&self, domain: &BoxDomain, field: &str) -> Result<()> {
        let n = domain.dim();
        for (name, len) in [
            ("lo", self.lo.len()),
            ("hi", self.hi.len()),
            ("lo_closed", self.lo_closed.len()),
            ("hi_closed", self.hi_closed.len()),
        ] {
            if len != n {
                return Err(Error::input(format!(
                    "{field}.{name}: expected {n} entries, got {len}"
                )));
            }
        }
        for i in 0..n {
            if !(self.lo[i] < self.hi[i]) {
                return Err(Error::input(format!(
                    "{field}: axis {i} is empty or degenerate ({} .. {})",
                    self.lo[i], self.hi[i]
                )));
            }
            if self.lo[i] < domain.lo()[i] || self.hi[i] > domain.hi()[i] {
                return Err(Error::input(format!(
                    "{field}: axis {i} [{}, {}] leaves the domain [{}, {}]",
                    self.lo[i],
                    self.hi[i],
                    domain.lo()[i],
                    domain.hi()[i]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub region: Region,
    pub expr: AffineExpr,
}

impl Piece {
    pub fn new(region: Region, expr: AffineExpr) -> Self {
        Piece { region, expr }
    }
}

/// A point-value override at an isolated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub point: Vec<f64>,
    pub value: f64,
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= POINT_EPS)
}

/// A bounded, possibly discontinuous payoff `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePayoff {
    domain: BoxDomain,
    pieces: Vec<Piece>,
    spikes: Vec<Spike>,
    bound: f64,
    boundary_coords: Vec<Vec<f64>>,
}

impl PiecewisePayoff {
    /// Validates that the regions partition `domain` and that `bound`
    /// (computed when `None`) dominates `sup |f|`.
    pub fn new(
        domain: &BoxDomain,
        pieces: Vec<Piece>,
        spikes: Vec<Spike>,
        bound: Option<f64>,
    ) -> Result<Self> {
        let n = domain.dim();
        if pieces.is_empty() {
            return Err(Error::input("payoff.pieces: at least one piece is required"));
        }
        for (k, p) in pieces.iter().enumerate() {
            let field = format!("payoff.pieces[{k}]");
            p.region.check(domain, &field)?;
            p.expr.check(n, &field)?;
        }
        for (k, s) in spikes.iter().enumerate() {
            let field = format!("payoff.spikes[{k}]");
            if s.point.len() != n {
                return Err(Error::input(format!(
                    "{field}.point: expected {n} coordinates, got {}",
                    s.point.len()
                )));
            }
            if !domain.contains(&s.point) {
                return Err(Error::input(format!(
                    "{field}.point {:?} lies outside the domain",
                    s.point
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::input(format!("{field}.value must be finite")));
            }
        }

        let boundary_coords = boundary_coordinates(domain, &pieces);
        check_partition(domain, &pieces, &boundary_coords)?;

        let computed = pieces
            .iter()
            .flat_map(|p| p.region.corners().into_iter().map(move |c| p.expr.eval(&c).abs()))
            .chain(spikes.iter().map(|s| s.value.abs()))
            .fold(0.0_f64, f64::max);
        let bound = match bound {
            None => computed,
            Some(b) if b.is_finite() && b + POINT_EPS >= computed => b,
            Some(b) => {
                return Err(Error::input(format!(
                    "payoff.bound: {b} is below sup|f| = {computed}"
                )))
            }
        };

        Ok(PiecewisePayoff {
            domain: domain.clone(),
            pieces,
            spikes,
            bound,
            boundary_coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Interior region-boundary coordinates per axis, sorted.
    pub fn boundary_coords(&self) -> &[Vec<f64>] {
        &self.boundary_coords
    }

    /// Index of the piece owning `y`, if any.
    pub fn owner(&self, y: &[f64]) -> Option<usize> {
        self.pieces.iter().position(|p| p.region.contains(y))
    }

    fn spike_at(&self, y: &[f64]) -> Option<&Spike> {
        self.spikes.iter().find(|s| same_point(&s.point, y))
    }

    /// Raw value `f(y)`: spike override, else the owning piece.
    pub fn eval(&self, y: &[f64]) -> Option<f64> {
        if let Some(s) = self.spike_at(y) {
            return Some(s.value);
        }
        self.owner(y).map(|k| self.pieces[k].expr.eval(y))
    }

    /// Limits of `f` at `y` from every piece whose closure contains `y`.
    pub fn limits_at<'a>(&'a self, y: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.pieces
            .iter()
            .filter(move |p| p.region.closure_contains(y))
            .map(move |p| p.expr.eval(y))
    }

    /// True when the own value and the adjacent limits at `y` do not all agree.
    pub fn is_discontinuity(&self, y: &[f64]) -> bool {
        let own = match self.eval(y) {
            Some(v) => v,
            None => return false,
        };
        self.limits_at(y).any(|l| (l - own).abs() > POINT_EPS)
    }

    /// Spikes whose value exceeds every adjacent limit.
    pub fn isolated_spikes(&self) -> Vec<&Spike> {
        self.spikes
            .iter()
            .filter(|s| {
                self.limits_at(&s.point)
                    .all(|l| s.value > l + POINT_EPS)
            })
            .collect()
    }
}

/// Sorted, deduplicated interior boundary coordinates per axis.
fn boundary_coordinates(domain: &BoxDomain, pieces: &[Piece]) -> Vec<Vec<f64>> {
    (0..domain.dim())
        .map(|i| {
            let mut cs: Vec<f64> = pieces
                .iter()
                .flat_map(|p| [p.region.lo[i], p.region.hi[i]])
                .filter(|&c| c > domain.lo()[i] && c < domain.hi()[i])
                .collect();
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            cs
        })
        .collect()
}

/// Exact partition check: membership is constant on every stratum of the
/// arrangement induced by the region bounds, so testing one representative per
/// stratum (breakpoints and midpoints, per axis) decides the partition property.
fn check_partition(domain: &BoxDomain, pieces: &[Piece], interior: &[Vec<f64>]) -> Result<()> {
    let n = domain.dim();
    let reps: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut bps = vec![domain.lo()[i]];
            bps.extend_from_slice(&interior[i]);
            bps.push(domain.hi()[i]);
            let mut r = Vec::with_capacity(2 * bps.len());
            for w in bps.windows(2) {
                r.push(w[0]);
                r.push(0.5 * (w[0] + w[1]));
            }
            r.push(*bps.last().unwrap());
            r
        })
        .collect();
    let total: usize = reps.iter().map(Vec::len).product();
    if total > 4_000_000 {
        return Err(Error::input(
            "payoff.pieces: region arrangement too large to verify",
        ));
    }
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    for _ in 0..total {
        for i in 0..n {
            y[i] = reps[i][idx[i]];
        }
        let owners: Vec<usize> = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.region.contains(&y))
            .map(|(k, _)| k)
            .collect();
        match owners.len() {
            1 => {}
            0 => {
                return Err(Error::input(format!(
                    "payoff.pieces: point {y:?} is not covered by any region"
                )))
            }
            _ => {
                return Err(Error::input(format!(
                    "payoff.pieces: point {y:?} is owned by regions {owners:?}"
                )))
            }
        }
        for i in 0..n {
            idx[i] += 1;
            if idx[i] < reps[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(())
}

/// The upper-regularized payoff: at every point the maximum of the own value
/// and all adjacent-piece limits. Spikes are kept, not erased.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedPayoff {
    base: PiecewisePayoff,
    regularity_violated: bool,
}

impl RegularizedPayoff {
    pub fn base(&self) -> &PiecewisePayoff {
        &self.base
    }

    /// Set when some spike sits strictly above every neighbouring limit, so the
    /// payoff fails the upper-semicontinuity regularity assumption.
    pub fn regularity_violated(&self) -> bool {
        self.regularity_violated
    }

    pub fn eval(&self, y: &[f64]) -> Option<f64> {
        let own = self.base.eval(y)?;
        Some(self.base.limits_at(y).fold(own, f64::max))
    }

    /// Applies the max-of-limits rule once more, treating the regularized value
    /// as the own value. Equal to [`eval`](Self::eval) everywhere.
    pub fn reapply(&self, y: &[f64]) -> Option<f64> {
        let own = self.eval(y)?;
        Some(self.base.limits_at(y).fold(own, f64::max))
    }
}

pub fn regularize(payoff: &PiecewisePayoff) -> RegularizedPayoff {
    RegularizedPayoff {
        regularity_violated: !payoff.isolated_spikes().is_empty(),
        base: payoff.clone(),
    }
}
