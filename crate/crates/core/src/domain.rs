//! Closed axis-aligned boxes `C = [lo_1, hi_1] x ... x [lo_n, hi_n]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondegenerate closed box in `R^n` that contains the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::input("domain must have at least one dimension"));
        }
        if lo.len() != hi.len() {
            return Err(Error::input(format!(
                "domain bounds have mismatched lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::input(format!("domain axis {i} has a non-finite bound")));
            }
            if l >= h {
                return Err(Error::input(format!(
                    "domain axis {i} is degenerate: lo {l} >= hi {h}"
                )));
            }
            if l > 0.0 || h < 0.0 {
                return Err(Error::input(format!(
                    "domain axis {i} = [{l}, {h}] does not contain zero"
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// The unit-free box `[lo, hi]^n`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| l <= v && v <= h)
    }

    /// Strict interior; in finite dimensions this is also the algebraic interior.
    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| l < v && v < h)
    }

    /// Errors unless `x` has the right length, is finite and lies in the box.
    pub fn check_point(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "{what} has dimension {} but the domain has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("{what} {x:?} is not finite")));
        }
        if !self.contains(x) {
            return Err(Error::input(format!("{what} {x:?} lies outside the domain")));
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &BoxDomain) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| other.lo[i] <= self.lo[i] && self.hi[i] <= other.hi[i])
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.width(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// The `2^n` corners in lexicographic order (bit `i` selects `hi` on axis `i`).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        corners_of(&self.lo, &self.hi)
    }
}

pub(crate) fn corners_of(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let n = lo.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                .collect()
        })
        .collect()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_and_zero_free_boxes() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![1.0], vec![2.0]).is_err());
        assert!(BoxDomain::new(vec![-2.0, 0.0], vec![-1.0, 1.0]).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, -1.0], vec![2.0, 0.0]).is_ok());
    }

    #[test]
    fn membership_and_interior() {
        let c = BoxDomain::cube(2, 0.0, 2.0).unwrap();
        assert!(c.contains(&[0.0, 2.0]));
        assert!(!c.is_interior(&[0.0, 1.0]));
        assert!(c.is_interior(&[1.0, 1.0]));
        assert!(!c.contains(&[2.1, 1.0]));
        assert!(c.check_point(&[1.0], "x").is_err());
        assert!(c.check_point(&[f64::NAN, 1.0], "x").is_err());
    }

    #[test]
    fn corners_are_lexicographic_by_axis_bits() {
        let c = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(
            c.corners(),
            vec![
                vec![0.0, -1.0],
                vec![2.0, -1.0],
                vec![0.0, 1.0],
                vec![2.0, 1.0]
            ]
        );
    }
}
