//! Points of the top space: finite-dimensional real vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the top space, stored as a dense real vector.
///
/// Construction rejects non-finite coordinates; everything downstream may
/// assume finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { coords: vec![0.0; dim] }
    }

    /// Standard basis vector `e_index` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[index] = 1.0;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![1.0, -2.5]).is_ok());
    }

    #[test]
    fn basic_algebra() {
        let a = Point::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(a.norm(), 5.0);
        let b = Point::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(a.dot(&b), -1.0);
        assert_eq!(a.sub(&b).coords(), &[2.0, 5.0]);
    }
}
