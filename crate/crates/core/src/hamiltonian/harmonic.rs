use alloc::vec::Vec;

use super::{check_dims, Hamiltonian};
use crate::autodiff::Scalar;
use crate::error::Result;

/// Separable baseline `H = ½‖p‖² + ½‖q‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Harmonic {
    n: usize,
}

pub fn harmonic_oscillator(n: usize) -> Harmonic {
    Harmonic { n }
}

impl Hamiltonian for Harmonic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        check_dims(self.n, q, p)?;
        Ok(q.iter().chain(p).fold(S::from_f64(0.0), |acc, x| acc + x.clone() * x.clone() * 0.5))
    }

    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        check_dims(self.n, q, p)?;
        Ok(q.to_vec())
    }

    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        check_dims(self.n, q, p)?;
        Ok(p.to_vec())
    }
}
