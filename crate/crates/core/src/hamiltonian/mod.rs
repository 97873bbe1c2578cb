//! Hamiltonian models.
//!
//! Every model evaluates `H`, `H_q` and `H_p` generically over
//! [`Scalar`], so the integrators can be run on dual numbers. Hessian
//! blocks default to dual-number differentiation of the gradients.

mod charged;
mod harmonic;
mod quadratic;
mod tokamak;

use alloc::vec::Vec;

pub use charged::{Charged, PotentialEval, UniformField, VectorPotential, ZeroField};
pub use harmonic::{harmonic_oscillator, Harmonic};
pub use quadratic::{quadratic_model, xi_matrix, Quadratic};
pub use tokamak::{
    tokamak_model, FIntegral, Nondimensionalizer, PhysicalParams, TokamakField, TokamakModel, AXIS_TOLERANCE,
    QUADRATURE_ORDER,
};

use crate::autodiff::{seed, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::state::PhaseState;

/// Second-derivative blocks at one point.
///
/// `pq[(r, s)] = ∂²H/∂q_r∂p_s`, i.e. the Jacobian of `H_q` with respect
/// to `p`; `qp` is the Jacobian of `H_p` with respect to `q` and equals
/// `pqᵀ` for smooth `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub qq: Matrix,
    pub pp: Matrix,
    pub pq: Matrix,
    pub qp: Matrix,
}

pub trait Hamiltonian {
    /// Number of degrees of freedom `N`.
    fn dim(&self) -> usize;

    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S>;

    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>>;

    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>>;

    fn hessian(&self, q: &[f64], p: &[f64]) -> Result<HessianBlocks> {
        hessian_by_duals(self, q, p)
    }

    /// `A(q)` and `D_qA(q)` when `H = ½‖p − A(q)‖²`.
    fn vector_potential<S: Scalar>(&self, _q: &[S]) -> Option<Result<PotentialEval<S>>> {
        None
    }

    /// `Ξ` when `H = ½‖q‖² + ½‖p‖² + qᵀΞp`.
    fn quadratic_coupling(&self) -> Option<&Matrix> {
        None
    }

    fn energy(&self, state: &PhaseState) -> Result<f64> {
        self.value(&state.q, &state.p)
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        (**self).value(q, p)
    }
    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        (**self).grad_q(q, p)
    }
    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        (**self).grad_p(q, p)
    }
    fn hessian(&self, q: &[f64], p: &[f64]) -> Result<HessianBlocks> {
        (**self).hessian(q, p)
    }
    fn vector_potential<S: Scalar>(&self, q: &[S]) -> Option<Result<PotentialEval<S>>> {
        (**self).vector_potential(q)
    }
    fn quadratic_coupling(&self) -> Option<&Matrix> {
        (**self).quadratic_coupling()
    }
}

/// Hessian blocks obtained by differentiating `H_q` and `H_p` with duals.
pub fn hessian_by_duals<H: Hamiltonian + ?Sized>(model: &H, q: &[f64], p: &[f64]) -> Result<HessianBlocks> {
    let n = model.dim();
    check_dims(n, q, p)?;
    let z = seed(&PhaseState::new(q.to_vec(), p.to_vec()));
    let gq = model.grad_q(&z.q, &z.p)?;
    let gp = model.grad_p(&z.q, &z.p)?;
    let block = |g: &[crate::autodiff::Dual], offset: usize| Matrix::from_fn(n, n, |r, s| g[r].derivative(offset + s));
    let out = HessianBlocks { qq: block(&gq, 0), pq: block(&gq, n), qp: block(&gp, 0), pp: block(&gp, n) };
    for m in [&out.qq, &out.pp, &out.pq] {
        if !m.is_finite() {
            return Err(Error::NonFinite { context: "hessian", index: 0 });
        }
    }
    Ok(out)
}

pub(crate) fn check_dims<S>(n: usize, q: &[S], p: &[S]) -> Result<()> {
    if q.len() != n || p.len() != n {
        return Err(Error::DimensionMismatch { op: "hamiltonian", left: (n, n), right: (q.len(), p.len()) });
    }
    Ok(())
}

/// `Ĥ = H ∘ ζ⁻¹` for the canonical swap `ζ(q, p) = (−p, q)`.
///
/// `Ĥ(Q, P) = H(P, −Q)`, so `Ĥ_Q = −H_p(P, −Q)` and `Ĥ_P = H_q(P, −Q)`.
#[derive(Debug, Clone)]
pub struct Swapped<H>(pub H);

impl<H: Hamiltonian> Swapped<H> {
    fn original<S: Scalar>(big_q: &[S], big_p: &[S]) -> (Vec<S>, Vec<S>) {
        (big_p.to_vec(), big_q.iter().cloned().map(|x| -x).collect())
    }
}

impl<H: Hamiltonian> Hamiltonian for Swapped<H> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        let (oq, op) = Self::original(q, p);
        self.0.value(&oq, &op)
    }

    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        let (oq, op) = Self::original(q, p);
        Ok(self.0.grad_p(&oq, &op)?.into_iter().map(|x| -x).collect())
    }

    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        let (oq, op) = Self::original(q, p);
        self.0.grad_q(&oq, &op)
    }
}

/// The models selectable at run time.
#[derive(Debug, Clone)]
pub enum Model {
    Quadratic(Quadratic),
    Harmonic(Harmonic),
    Tokamak(TokamakModel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Quadratic(_) => "quadratic",
            Model::Harmonic(_) => "harmonic",
            Model::Tokamak(_) => "tokamak",
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Quadratic($m) => $e,
            Model::Harmonic($m) => $e,
            Model::Tokamak($m) => $e,
        }
    };
}

impl Hamiltonian for Model {
    fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }
    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        dispatch!(self, m => m.value(q, p))
    }
    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        dispatch!(self, m => m.grad_q(q, p))
    }
    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        dispatch!(self, m => m.grad_p(q, p))
    }
    fn hessian(&self, q: &[f64], p: &[f64]) -> Result<HessianBlocks> {
        dispatch!(self, m => m.hessian(q, p))
    }
    fn vector_potential<S: Scalar>(&self, q: &[S]) -> Option<Result<PotentialEval<S>>> {
        dispatch!(self, m => m.vector_potential(q))
    }
    fn quadratic_coupling(&self) -> Option<&Matrix> {
        dispatch!(self, m => m.quadratic_coupling())
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::autodiff::{finite_difference_jacobian, FD_STEP};

    /// Central-difference gradient of `H` in `(q, p)` order.
    pub fn fd_gradient<H: Hamiltonian>(model: &H, at: &PhaseState) -> Vec<f64> {
        let n = model.dim();
        let z = at.to_vec();
        (0..2 * n)
            .map(|j| {
                let dx = 1e-6 * z[j].abs().max(1e-3);
                let mut a = z.clone();
                let mut b = z.clone();
                a[j] += dx;
                b[j] -= dx;
                let ha = model.value(&a[..n], &a[n..]).unwrap();
                let hb = model.value(&b[..n], &b[n..]).unwrap();
                (ha - hb) / (2.0 * dx)
            })
            .collect()
    }

    pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    /// Gradients against finite differences and Hessian symmetry.
    pub fn check_model<H: Hamiltonian>(model: &H, at: &PhaseState, grad_tol: f64) {
        let n = model.dim();
        let mut analytic = model.grad_q(&at.q, &at.p).unwrap();
        analytic.extend(model.grad_p(&at.q, &at.p).unwrap());
        let fd = fd_gradient(model, at);
        let err = rel_err(&analytic, &fd);
        assert!(err <= grad_tol, "gradient vs FD relative error {err:e}");

        let hs = model.hessian(&at.q, &at.p).unwrap();
        assert!(hs.qq.sub(&hs.qq.transpose()).unwrap().frobenius_norm() <= 1e-12);
        assert!(hs.pp.sub(&hs.pp.transpose()).unwrap().frobenius_norm() <= 1e-12);
        assert!(hs.qp.sub(&hs.pq.transpose()).unwrap().frobenius_norm() <= 1e-12 * hs.pq.frobenius_norm().max(1.0));

        // Hessian of H equals the Jacobian of its gradient field.
        let grad_map = |s: &PhaseState| {
            PhaseState::from_slice(n, &[model.grad_q(&s.q, &s.p)?, model.grad_p(&s.q, &s.p)?].concat())
        };
        let fdh = finite_difference_jacobian(grad_map, at, FD_STEP).unwrap();
        let blocks = crate::linalg::Block2x2::split(&fdh).unwrap();
        let scale = fdh.frobenius_norm().max(1e-12);
        assert!(blocks.tl.sub(&hs.qq).unwrap().frobenius_norm() <= 1e-5 * scale);
        assert!(blocks.tr.sub(&hs.pq).unwrap().frobenius_norm() <= 1e-5 * scale);
        assert!(blocks.br.sub(&hs.pp).unwrap().frobenius_norm() <= 1e-5 * scale);
    }
}

#[cfg(test)]
mod tests {
    use super::testing::check_model;
    use super::*;
    use alloc::vec;

    #[test]
    fn swapped_model_gradients() {
        let h = quadratic_model(3).unwrap();
        let sw = Swapped(h.clone());
        let at = PhaseState::new(vec![0.2, -0.4, 1.0], vec![0.7, 0.1, -0.3]);
        check_model(&sw, &at, 1e-6);
        // Ĥ(ζ z) = H(z)
        let z = PhaseState::new(vec![0.3, 0.5, -0.2], vec![-1.0, 0.25, 0.4]);
        let zz = z.swap_coordinates();
        let a = h.value(&z.q, &z.p).unwrap();
        let b = sw.value(&zz.q, &zz.p).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn model_enum_dispatches() {
        let m = Model::Quadratic(quadratic_model(2).unwrap());
        assert_eq!(m.dim(), 2);
        assert_eq!(m.name(), "quadratic");
        assert!(m.quadratic_coupling().is_some());
        assert!(m.vector_potential(&[0.0_f64, 0.0]).is_none());
    }
}
