use alloc::vec::Vec;

use super::{check_dims, Hamiltonian, HessianBlocks};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The `N×N` Toeplitz coupling `Ξ`: zero diagonal, `−2` above, `+1` below.
pub fn xi_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        core::cmp::Ordering::Less => -2.0,
        core::cmp::Ordering::Equal => 0.0,
        core::cmp::Ordering::Greater => 1.0,
    })
}

/// `H = ½Σ(p_i² + q_i²) + Σ_{i<j}(p_i q_j − 2 q_i p_j) = ½‖q‖² + ½‖p‖² + qᵀΞp`.
///
/// Its Hessian is constant: `H_qq = H_pp = I`, `H_pq = Ξ`, which makes
/// the defect of the FPI flows available in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    xi: Matrix,
}

pub fn quadratic_model(n: usize) -> Result<Quadratic> {
    if n < 2 {
        return Err(Error::InvalidArgument("quadratic model needs N >= 2"));
    }
    Ok(Quadratic { xi: xi_matrix(n) })
}

impl Quadratic {
    pub fn xi(&self) -> &Matrix {
        &self.xi
    }
}

impl Hamiltonian for Quadratic {
    fn dim(&self) -> usize {
        self.xi.rows()
    }

    fn value<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        let n = self.dim();
        check_dims(n, q, p)?;
        let mut h = S::from_f64(0.0);
        for i in 0..n {
            h = h + (p[i].clone() * p[i].clone() + q[i].clone() * q[i].clone()) * 0.5;
            for j in i + 1..n {
                h = h + p[i].clone() * q[j].clone() - q[i].clone() * p[j].clone() * 2.0;
            }
        }
        Ok(h)
    }

    fn grad_q<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        // q + Ξp
        let n = self.dim();
        check_dims(n, q, p)?;
        Ok((0..n)
            .map(|k| (0..n).filter(|&s| s != k).fold(q[k].clone(), |acc, s| acc + p[s].clone() * self.xi[(k, s)]))
            .collect())
    }

    fn grad_p<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        // p + Ξᵀq
        let n = self.dim();
        check_dims(n, q, p)?;
        Ok((0..n)
            .map(|k| (0..n).filter(|&r| r != k).fold(p[k].clone(), |acc, r| acc + q[r].clone() * self.xi[(r, k)]))
            .collect())
    }

    fn hessian(&self, q: &[f64], p: &[f64]) -> Result<HessianBlocks> {
        let n = self.dim();
        check_dims(n, q, p)?;
        Ok(HessianBlocks {
            qq: Matrix::identity(n),
            pp: Matrix::identity(n),
            pq: self.xi.clone(),
            qp: self.xi.transpose(),
        })
    }

    fn quadratic_coupling(&self) -> Option<&Matrix> {
        Some(&self.xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::hessian_by_duals;
    use crate::hamiltonian::testing::check_model;
    use crate::state::PhaseState;

    #[test]
    fn xi_of_three() {
        let want = Matrix::from_rows(&[[0.0, -2.0, -2.0], [1.0, 0.0, -2.0], [1.0, 1.0, 0.0]]);
        assert_eq!(xi_matrix(3), want);
        assert_eq!(quadratic_model(3).unwrap().hessian(&[0.0; 3], &[0.0; 3]).unwrap().pq, want);
    }

    #[test]
    fn gradient_example_n2() {
        let m = quadratic_model(2).unwrap();
        let (q, p) = ([1.0, 0.0], [0.0, 1.0]);
        assert_eq!(m.grad_q(&q, &p).unwrap(), [-1.0, 0.0]);
        assert_eq!(m.grad_p(&q, &p).unwrap(), [0.0, -1.0]);
        assert_eq!(m.value(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_degenerate_dimension() {
        assert!(quadratic_model(1).is_err());
        assert!(quadratic_model(0).is_err());
    }

    #[test]
    fn gradients_and_hessian_consistent() {
        for n in 2..=5 {
            let m = quadratic_model(n).unwrap();
            let at = PhaseState::new(
                (0..n).map(|i| 0.3 * i as f64 - 0.5).collect(),
                (0..n).map(|i| 1.0 - 0.2 * i as f64).collect(),
            );
            check_model(&m, &at, 1e-6);
            // Closed-form Hessian agrees with the dual-number one and is integral.
            let by_duals = hessian_by_duals(&m, &at.q, &at.p).unwrap();
            assert_eq!(by_duals, m.hessian(&at.q, &at.p).unwrap());
            assert!(by_duals.pq.as_slice().iter().all(|x| x.fract() == 0.0));
        }
        let m = quadratic_model(3).unwrap();
        let a = m.hessian(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        let b = m.hessian(&[0.0; 3], &[-4.0; 3]).unwrap();
        assert_eq!(a, b);
    }
}
