use alloc::vec;
use alloc::vec::Vec;

use super::{check_dims, Hamiltonian};
use crate::autodiff::Scalar;
use crate::error::Result;

/// `A(q)` together with its Jacobian, `da[i][j] = ∂A_i/∂q_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEval<S> {
    pub a: Vec<S>,
    pub da: Vec<Vec<S>>,
}

/// A magnetic vector potential depending on position only.
pub trait VectorPotential {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, q: &[S]) -> Result<PotentialEval<S>>;
}

/// Nondimensional charged particle, `H = ½‖p − A(q)‖²`.
///
/// `H_p = p − A` and `H_q = −(D_qA)ᵀ(p − A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Charged<P> {
    pub field: P,
}

impl<P: VectorPotential> Charged<P> {
    pub fn new(field: P) -> Self {
        Self { field }
    }

    fn kinetic<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<(Vec<S>, PotentialEval<S>)> {
        check_dims(self.field.dim(), q, p)?;
        let pot = self.field.eval(q)?;
        let v = p.iter().zip(&pot.a).map(|(pi, ai)| pi.clone() - ai.clone()).collect();
        Ok((v, pot))
    }
}

impl<P: VectorPotential> Hamiltonian for Charged<P> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        let (v, _) = self.kinetic(q, p)?;
        Ok(v.into_iter().fold(S::from_f64(0.0), |acc, x| acc + x.clone() * x * 0.5))
    }

    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        let (v, pot) = self.kinetic(q, p)?;
        let n = v.len();
        Ok((0..n).map(|j| (0..n).fold(S::from_f64(0.0), |acc, i| acc - pot.da[i][j].clone() * v[i].clone())).collect())
    }

    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        Ok(self.kinetic(q, p)?.0)
    }

    fn vector_potential<S: Scalar>(&self, q: &[S]) -> Option<Result<PotentialEval<S>>> {
        Some(self.field.eval(q))
    }
}

/// `A ≡ 0`: a free particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroField {
    pub n: usize,
}

impl VectorPotential for ZeroField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<S: Scalar>(&self, q: &[S]) -> Result<PotentialEval<S>> {
        let n = q.len();
        Ok(PotentialEval { a: vec![S::from_f64(0.0); n], da: vec![vec![S::from_f64(0.0); n]; n] })
    }
}

/// Constant field from `A = (−αy, βx, 0)`; the Hamiltonian is quadratic
/// with mixed `q`–`p` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub alpha: f64,
    pub beta: f64,
}

impl VectorPotential for UniformField {
    fn dim(&self) -> usize {
        3
    }

    fn eval<S: Scalar>(&self, q: &[S]) -> Result<PotentialEval<S>> {
        let zero = || S::from_f64(0.0);
        let a = vec![q[1].clone() * -self.alpha, q[0].clone() * self.beta, zero()];
        let da = vec![
            vec![zero(), S::from_f64(-self.alpha), zero()],
            vec![S::from_f64(self.beta), zero(), zero()],
            vec![zero(), zero(), zero()],
        ];
        Ok(PotentialEval { a, da })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::testing::check_model;
    use crate::state::PhaseState;

    #[test]
    fn uniform_field_model() {
        let m = Charged::new(UniformField { alpha: 0.5, beta: 0.5 });
        let at = PhaseState::new(vec![0.3, -0.2, 0.1], vec![0.05, 0.4, -0.2]);
        check_model(&m, &at, 1e-6);
        // H vanishes when p = A(q).
        let a = m.field.eval(&at.q).unwrap().a;
        assert_eq!(m.value(&at.q, &a).unwrap(), 0.0);
        let hs = m.hessian(&at.q, &at.p).unwrap();
        assert_eq!(hs.pp, crate::linalg::Matrix::identity(3));
    }

    #[test]
    fn free_particle() {
        let m = Charged::new(ZeroField { n: 2 });
        assert_eq!(m.grad_q(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), [0.0, 0.0]);
        assert_eq!(m.grad_p(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), [3.0, 4.0]);
    }
}
