use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

/// A point of `ℝ^d` in model units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    /// Wraps the given components.
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    /// The zero vector of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    /// A vector with every component equal to `value`.
    pub fn filled(dim: usize, value: f64) -> Self {
        Self(alloc::vec![value; dim])
    }

    /// Number of components.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Components as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Components as a mutable slice.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// Unwraps the component vector.
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// True when no component is NaN or infinite.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// True iff every component is strictly positive.
    pub fn in_positive_cone(&self) -> bool {
        in_positive_cone(&self.0)
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for StateVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for StateVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for StateVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// True iff every component of `x` is strictly greater than zero.
///
/// NaN components are not positive.
pub fn in_positive_cone(x: &[f64]) -> bool {
    x.iter().all(|&v| v > 0.0)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    crate::math::sqrt(x.iter().map(|v| v * v).sum())
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    crate::math::sqrt(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_cone_membership() {
        assert!(in_positive_cone(&[1.0, 2.0, 3.0]));
        assert!(!in_positive_cone(&[1.0, 0.0]));
        assert!(!in_positive_cone(&[1.0, -1e-300]));
        assert!(!in_positive_cone(&[f64::NAN]));
        assert!(in_positive_cone(&[f64::MIN_POSITIVE]));
    }

    #[test]
    fn positive_cone_ignores_order() {
        let x = [0.5, 2.0, -1.0, 4.0];
        let mut y = x;
        y.reverse();
        assert_eq!(in_positive_cone(&x), in_positive_cone(&y));
        let z = [3.0, 1.0, 2.0];
        assert!(in_positive_cone(&z) && in_positive_cone(&[2.0, 3.0, 1.0]));
    }

    #[test]
    fn norm_and_distance() {
        let v = StateVector::from([3.0, 4.0]);
        assert_eq!(v.norm(), 5.0);
        assert_eq!(distance(&[1.0, 1.0], &[4.0, 5.0]), 5.0);
    }
}
