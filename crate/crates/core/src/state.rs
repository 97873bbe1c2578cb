use alloc::vec::Vec;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// Phase-space point `(q, p)` with `N` components each.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<S = f64> {
    pub q: Vec<S>,
    pub p: Vec<S>,
}

impl<S: Scalar> PhaseState<S> {
    /// Panics when `q` and `p` differ in length.
    pub fn new(q: Vec<S>, p: Vec<S>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal dimension");
        Self { q, p }
    }

    /// Splits a `2N` slice ordered `(q, p)`.
    pub fn from_slice(n: usize, z: &[S]) -> Result<Self> {
        if z.len() != 2 * n {
            return Err(Error::DimensionMismatch { op: "phase state", left: (2 * n, 1), right: (z.len(), 1) });
        }
        Ok(Self { q: z[..n].to_vec(), p: z[n..].to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.q.iter().chain(&self.p).cloned().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(Scalar::is_finite)
    }

    /// Primal values.
    pub fn values(&self) -> PhaseState<f64> {
        PhaseState { q: self.q.iter().map(Scalar::value).collect(), p: self.p.iter().map(Scalar::value).collect() }
    }

    /// The canonical swap `ζ(q, p) = (−p, q)`.
    pub fn swap_coordinates(&self) -> Self {
        Self { q: self.p.iter().cloned().map(|x| -x).collect(), p: self.q.clone() }
    }

    /// Inverse swap `ζ⁻¹(Q, P) = (P, −Q)`.
    pub fn unswap_coordinates(&self) -> Self {
        Self { q: self.p.clone(), p: self.q.iter().cloned().map(|x| -x).collect() }
    }
}

impl PhaseState<f64> {
    pub fn zeros(n: usize) -> Self {
        Self { q: alloc::vec![0.0; n], p: alloc::vec![0.0; n] }
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.q.iter().chain(&self.p).zip(other.q.iter().chain(&other.p)).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
