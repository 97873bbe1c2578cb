//! Forward-mode differentiation with multi-directional dual numbers.
//!
//! A [`Dual`] carries a value and a gradient of width `W`; seeding the
//! `2N` phase-space coordinates with unit directions gives the full
//! Jacobian of a flow map in one evaluation. Numerical code in this crate
//! is written against the [`Scalar`] trait so the same routine runs on
//! plain `f64` (trajectories) and on [`Dual`] (Jacobians).
//!
//! Functions whose value comes from a numerical procedure (quadrature,
//! say) enter through [`CustomPrimitive`]: the value is computed on the
//! primal part and the derivative is supplied analytically, so the
//! procedure itself is never differentiated.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::state::PhaseState;

/// A scalar function with a known derivative.
pub trait CustomPrimitive {
    fn evaluate(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// Arithmetic needed by the models and integrators.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant (zero derivative).
    fn from_f64(c: f64) -> Self;
    /// Primal value.
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    /// Applies a primitive using its registered derivative.
    fn apply<P: CustomPrimitive + ?Sized>(self, prim: &P) -> Self;
    /// True when the value and every derivative component are finite.
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn apply<P: CustomPrimitive + ?Sized>(self, prim: &P) -> Self {
        prim.evaluate(self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Dual number `value + Σ grad[k]·ε_k` with `ε_i ε_j = 0`.
///
/// An empty `grad` is a constant and broadcasts against any width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Self { value, grad: Vec::new() }
    }

    /// The `index`-th of `width` independent variables.
    pub fn variable(value: f64, index: usize, width: usize) -> Self {
        let mut grad = vec![0.0; width];
        grad[index] = 1.0;
        Self { value, grad }
    }

    pub fn width(&self) -> usize {
        self.grad.len()
    }

    /// Partial derivative along direction `k` (zero for constants).
    pub fn derivative(&self, k: usize) -> f64 {
        self.grad.get(k).copied().unwrap_or(0.0)
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        let mut grad = self.grad;
        for g in &mut grad {
            *g *= slope;
        }
        Self { value, grad }
    }

    /// `self·a + other·b` on the gradient parts, with the given value.
    fn combine(self, other: Self, value: f64, a: f64, b: f64) -> Self {
        let (mut long, short, la, sb) = if self.grad.len() >= other.grad.len() {
            (self.grad, other.grad, a, b)
        } else {
            (other.grad, self.grad, b, a)
        };
        debug_assert!(short.is_empty() || short.len() == long.len(), "dual width mismatch");
        if la != 1.0 {
            for g in &mut long {
                *g *= la;
            }
        }
        for (g, s) in long.iter_mut().zip(&short) {
            *g += sb * s;
        }
        Self { value, grad: long }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        let v = self.value + rhs.value;
        self.combine(rhs, v, 1.0, 1.0)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        let v = self.value - rhs.value;
        self.combine(rhs, v, 1.0, -1.0)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        self.combine(rhs, a * b, b, a)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let (a, b) = (self.value, rhs.value);
        self.combine(rhs, a / b, 1.0 / b, -a / (b * b))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        let v = -self.value;
        self.chain(v, -1.0)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(mut self, rhs: f64) -> Dual {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: f64) -> Dual {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, rhs: f64) -> Dual {
        let v = self.value * rhs;
        self.chain(v, rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, rhs: f64) -> Dual {
        let v = self.value / rhs;
        self.chain(v, 1.0 / rhs)
    }
}

impl Scalar for Dual {
    fn from_f64(c: f64) -> Self {
        Dual::constant(c)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.value);
        self.chain(s, 0.5 / s)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(libm::log(v), 1.0 / v)
    }
    fn apply<P: CustomPrimitive + ?Sized>(self, prim: &P) -> Self {
        let x = self.value;
        self.chain(prim.evaluate(x), prim.derivative(x))
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

/// Seeds a state as `2N` independent dual variables, `q` first.
pub fn seed(at: &PhaseState) -> PhaseState<Dual> {
    let n = at.dim();
    let w = 2 * n;
    PhaseState {
        q: at.q.iter().enumerate().map(|(i, &x)| Dual::variable(x, i, w)).collect(),
        p: at.p.iter().enumerate().map(|(i, &x)| Dual::variable(x, n + i, w)).collect(),
    }
}

/// Exact Jacobian of `map` at `at`: entry `(i, j)` is `∂out_i/∂in_j`,
/// components ordered `(q, p)`.
pub fn jacobian<F>(map: F, at: &PhaseState) -> Result<Matrix>
where
    F: FnOnce(&PhaseState<Dual>) -> Result<PhaseState<Dual>>,
{
    let n = at.dim();
    if !at.is_finite() {
        return Err(Error::InvalidArgument("jacobian evaluation point is not finite"));
    }
    let out = map(&seed(at))?;
    if out.dim() != n {
        return Err(Error::DimensionMismatch { op: "jacobian", left: (2 * n, 1), right: (2 * out.dim(), 1) });
    }
    let mut jac = Matrix::zeros(2 * n, 2 * n);
    for (i, d) in out.q.iter().chain(&out.p).enumerate() {
        if !Scalar::is_finite(d) {
            return Err(Error::NonFinite { context: "jacobian output", index: i });
        }
        for j in 0..2 * n {
            jac[(i, j)] = d.derivative(j);
        }
    }
    Ok(jac)
}

/// Default relative step of [`finite_difference_jacobian`].
pub const FD_STEP: f64 = 1e-6;

/// Central-difference Jacobian, `O(step²)` accurate.
///
/// The perturbation of coordinate `j` is `step·max(1, |at_j|)`.
pub fn finite_difference_jacobian<F>(map: F, at: &PhaseState, step: f64) -> Result<Matrix>
where
    F: Fn(&PhaseState) -> Result<PhaseState>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive"));
    }
    let n = at.dim();
    let base = at.to_vec();
    let mut jac = Matrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let dx = step * base[j].abs().max(1.0);
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += dx;
        minus[j] -= dx;
        let fp = map(&PhaseState::from_slice(n, &plus)?)?.to_vec();
        let fm = map(&PhaseState::from_slice(n, &minus)?)?.to_vec();
        for i in 0..2 * n {
            let d = (fp[i] - fm[i]) / (2.0 * dx);
            if !d.is_finite() {
                return Err(Error::NonFinite { context: "finite-difference output", index: i });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

/// Gaussian elimination with partial pivoting on primal values, generic
/// over the scalar so that linear solves inside a flow map differentiate
/// exactly. `a` is row-major `n×n`.
pub fn solve_linear<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { op: "solve_linear", left: (a.len(), n), right: (n, 1) });
    }
    let scale = libm::sqrt(a.iter().flatten().map(|x| x.value() * x.value()).sum::<f64>());
    let tol = crate::linalg::SINGULAR_RTOL * scale;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].value().abs().total_cmp(&a[j][k].value().abs())).unwrap_or(k);
        let mag = a[p][k].value().abs();
        if !(mag > tol) {
            return Err(Error::Singular { pivot: k, magnitude: mag, tolerance: tol });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let factor = a[i][k].clone() / a[k][k].clone();
            for j in k + 1..n {
                let t = a[i][j].clone() - factor.clone() * a[k][j].clone();
                a[i][j] = t;
            }
            let t = b[i].clone() - factor * b[k].clone();
            b[i] = t;
        }
    }
    let mut x: Vec<S> = vec![S::from_f64(0.0); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            s = s - a[i][j].clone() * x[j].clone();
        }
        x[i] = s / a[i][i].clone();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cube;
    impl CustomPrimitive for Cube {
        fn evaluate(&self, x: f64) -> f64 {
            x * x * x
        }
        fn derivative(&self, x: f64) -> f64 {
            3.0 * x * x
        }
    }

    #[test]
    fn dual_arithmetic_follows_chain_rule() {
        // f(x, y) = (x·y + x/y − 2) · sqrt(x) + ln(y), at (4, 2)
        let x = Dual::variable(4.0, 0, 2);
        let y = Dual::variable(2.0, 1, 2);
        let f = (x.clone() * y.clone() + x.clone() / y.clone() - 2.0) * x.clone().sqrt() + y.clone().ln();
        let (xv, yv) = (4.0_f64, 2.0_f64);
        let g = xv * yv + xv / yv - 2.0;
        assert!((f.value - (g * xv.sqrt() + yv.ln())).abs() < 1e-15);
        let dfdx = (yv + 1.0 / yv) * xv.sqrt() + g * 0.5 / xv.sqrt();
        let dfdy = (xv - xv / (yv * yv)) * xv.sqrt() + 1.0 / yv;
        assert!((f.grad[0] - dfdx).abs() < 1e-14);
        assert!((f.grad[1] - dfdy).abs() < 1e-14);
    }

    #[test]
    fn constants_broadcast() {
        let x = Dual::variable(3.0, 1, 3);
        let c = Dual::constant(2.0);
        let y = c.clone() * x.clone() - c;
        assert_eq!(y.value, 4.0);
        assert_eq!(y.grad, [0.0, 2.0, 0.0]);
        assert_eq!((-x.clone()).grad, [0.0, -1.0, 0.0]);
        assert_eq!((x / 4.0).grad, [0.0, 0.25, 0.0]);
    }

    #[test]
    fn primitive_uses_registered_derivative() {
        let x = Dual::variable(2.0, 0, 1);
        let y = x.apply(&Cube);
        assert_eq!(y.value, 8.0);
        assert_eq!(y.grad, [12.0]);
        assert_eq!(2.0_f64.apply(&Cube), 8.0);
    }

    #[test]
    fn identity_and_linear_maps() {
        let at = PhaseState::new(vec![0.3, -1.2], vec![2.0, 0.5]);
        let j = jacobian(|s| Ok(s.clone()), &at).unwrap();
        assert_eq!(j, Matrix::identity(4));

        let l = Matrix::from_fn(4, 4, |i, j| (i as f64) - 2.0 * (j as f64) + 0.5);
        let lin = |s: &PhaseState<Dual>| {
            let z: Vec<Dual> = s.q.iter().chain(&s.p).cloned().collect();
            let out: Vec<Dual> =
                (0..4).map(|i| (0..4).fold(Dual::constant(0.0), |acc, j| acc + z[j].clone() * l[(i, j)])).collect();
            PhaseState::from_slice(2, &out)
        };
        assert_eq!(jacobian(lin, &at).unwrap(), l);
    }

    #[test]
    fn harmonic_euler_step_by_hand() {
        // p̃ = p − h q, q̃ = q + h p̃  ⇒  [[1 − h², h], [−h, 1]]
        let h = 0.1;
        let step = |s: &PhaseState<Dual>| {
            let p = s.p[0].clone() - s.q[0].clone() * h;
            let q = s.q[0].clone() + p.clone() * h;
            Ok(PhaseState::new(vec![q], vec![p]))
        };
        let j = jacobian(step, &PhaseState::new(vec![0.7], vec![-0.4])).unwrap();
        let expected = Matrix::from_rows(&[[1.0 - h * h, h], [-h, 1.0]]);
        assert!(j.sub(&expected).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn non_finite_output_is_reported() {
        let at = PhaseState::new(vec![0.0], vec![1.0]);
        let err =
            jacobian(|s| Ok(PhaseState::new(vec![s.q[0].clone().sqrt()], vec![s.p[0].clone()])), &at).unwrap_err();
        assert_eq!(err, Error::NonFinite { context: "jacobian output", index: 0 });
    }

    #[test]
    fn finite_differences() {
        let at = PhaseState::new(vec![1.0, 1.0], vec![1.0, 1.0]);
        let id = finite_difference_jacobian(|s| Ok(s.clone()), &at, FD_STEP).unwrap();
        assert!(id.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-10);

        let square = |s: &PhaseState| {
            Ok(PhaseState::new(s.q.iter().map(|x| x * x).collect(), s.p.iter().map(|x| x * x).collect()))
        };
        let j = finite_difference_jacobian(square, &at, FD_STEP).unwrap();
        assert!(j.sub(&Matrix::identity(4).scale(2.0)).unwrap().max_abs() < 1e-8);
        assert!(finite_difference_jacobian(square, &at, 0.0).is_err());
    }

    #[test]
    fn linear_solve_differentiates() {
        // x(t) solves [[2, t], [1, 3]] x = [1, 2]; check dx/dt against the closed form.
        let t = Dual::variable(0.5, 0, 1);
        let a = vec![vec![Dual::constant(2.0), t.clone()], vec![Dual::constant(1.0), Dual::constant(3.0)]];
        let b = vec![Dual::constant(1.0), Dual::constant(2.0)];
        let x = solve_linear(a, b).unwrap();
        let tv = 0.5;
        let det = 6.0 - tv;
        assert!((x[0].value - (3.0 - 2.0 * tv) / det).abs() < 1e-15);
        // d/dt (3 − 2t)/(6 − t) = (−2(6 − t) + (3 − 2t)) / (6 − t)²
        let dx0 = (-2.0 * det + (3.0 - 2.0 * tv)) / (det * det);
        assert!((x[0].grad[0] - dx0).abs() < 1e-15);
        assert!(matches!(
            solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]),
            Err(Error::Singular { pivot: 1, .. })
        ));
    }
}
