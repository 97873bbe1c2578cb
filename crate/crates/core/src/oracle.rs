//! Closed-form references for the quadratic model.
//!
//! `Ξ` (zero diagonal, `−2` above, `+1` below) is Toeplitz, and so is
//! every power `Ξ^M`: entry `(i, j)` depends on `l = i − j` only, through
//! an integer sequence `ξ^{(M)}(l)` that satisfies
//! `−2·ξ^{(M)}(l) = ξ^{(M)}(l − N)` for `l = 1, …, N − 1`.
//!
//! Because the Hessian of the quadratic model is constant, the p-implicit
//! FPI flow has an exact defect:
//!
//! ```text
//! [q̃_q, p̃_q] = 2(−1)^M h^{M+1} [Ξ^M]_skew
//! A          = I + (−1)^M h^{M+1} Ξ^{M+1}
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{skew_part, Matrix};

/// `Ξ^M` in exact integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiPower {
    n: usize,
    m: u32,
    entries: Vec<i64>,
}

impl XiPower {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    /// `ξ^{(M)}(l)` for `|l| < N`, read off the first column (`l ≥ 0`) and
    /// the first row (`l < 0`).
    pub fn xi(&self, l: i64) -> i64 {
        let n = self.n as i64;
        assert!(l.abs() < n, "diagonal index out of range");
        if l >= 0 {
            self.entry(l as usize, 0)
        } else {
            self.entry(0, (-l) as usize)
        }
    }

    /// `ξ^{(M)}(l)` for `l = −(N−1), …, N−1`.
    pub fn diagonal_values(&self) -> Vec<i64> {
        let n = self.n as i64;
        (-(n - 1)..n).map(|l| self.xi(l)).collect()
    }

    pub fn is_toeplitz(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..n).all(|j| self.entry(i, j) == self.xi(i as i64 - j as i64)))
    }

    /// `−2·ξ(l) = ξ(l − N)` for `l = 1, …, N − 1`.
    pub fn satisfies_shift_relation(&self) -> bool {
        let n = self.n as i64;
        (1..n).all(|l| -2 * self.xi(l) == self.xi(l - n))
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.entry(i, j) as f64)
    }
}

/// `Ξ^M` by repeated integer multiplication, with the Toeplitz structure
/// and the shift relation checked. Overflow or a violated property is an
/// error.
///
/// Symmetry is reported by [`XiPower::is_symmetric`] rather than
/// enforced: `Ξ^M` is non-symmetric except for `N = 2` and even `M`,
/// where `Ξ² = −2I` makes every even power a multiple of the identity.
pub fn xi_power(n: usize, m: u32) -> Result<XiPower> {
    if n < 2 || m < 1 {
        return Err(Error::InvalidArgument("xi_power needs N >= 2 and M >= 1"));
    }
    let base: Vec<i64> = (0..n * n)
        .map(|k| match (k / n).cmp(&(k % n)) {
            core::cmp::Ordering::Less => -2,
            core::cmp::Ordering::Equal => 0,
            core::cmp::Ordering::Greater => 1,
        })
        .collect();
    let mut acc = base.clone();
    for _ in 1..m {
        let mut next = vec![0_i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s: i64 = 0;
                for k in 0..n {
                    let t = acc[i * n + k].checked_mul(base[k * n + j]).ok_or(Error::Invariant("Ξ^M overflows i64"))?;
                    s = s.checked_add(t).ok_or(Error::Invariant("Ξ^M overflows i64"))?;
                }
                next[i * n + j] = s;
            }
        }
        acc = next;
    }
    let out = XiPower { n, m, entries: acc };
    if !out.is_toeplitz() {
        return Err(Error::Invariant("Ξ^M is not Toeplitz"));
    }
    if !out.satisfies_shift_relation() {
        return Err(Error::Invariant("Ξ^M violates −2ξ(l) = ξ(l − N)"));
    }
    Ok(out)
}

/// Exact defect blocks of the p-implicit FPI flow on the quadratic model.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem5Blocks {
    /// `[q̃_q, p̃_q] = 2(−1)^M h^{M+1} [Ξ^M]_skew`.
    pub diag: Matrix,
    /// `A = I + (−1)^M h^{M+1} Ξ^{M+1}`.
    pub antidiag: Matrix,
}

pub fn theorem5_blocks(n: usize, m: u32, h: f64) -> Result<Theorem5Blocks> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("h must be > 0"));
    }
    let c = if m.is_multiple_of(2) { 1.0 } else { -1.0 } * libm::pow(h, f64::from(m + 1));
    let diag = skew_part(&xi_power(n, m)?.to_matrix())?.scale(2.0 * c);
    let antidiag = Matrix::identity(n).add(&xi_power(n, m + 1)?.to_matrix().scale(c))?;
    Ok(Theorem5Blocks { diag, antidiag })
}

/// Componentwise comparison: relative error on nonzero reference
/// entries, absolute error where the reference is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub max_rel: f64,
    pub max_abs_on_zero: f64,
}

impl Discrepancy {
    pub fn within(&self, rtol: f64, atol_zero: f64) -> bool {
        self.max_rel <= rtol && self.max_abs_on_zero <= atol_zero
    }
}

pub fn componentwise(measured: &Matrix, reference: &Matrix) -> Result<Discrepancy> {
    let diff = measured.sub(reference)?;
    let mut out = Discrepancy { max_rel: 0.0, max_abs_on_zero: 0.0 };
    for (d, r) in diff.as_slice().iter().zip(reference.as_slice()) {
        if *r == 0.0 {
            out.max_abs_on_zero = out.max_abs_on_zero.max(d.abs());
        } else {
            out.max_rel = out.max_rel.max(d.abs() / r.abs());
        }
    }
    Ok(out)
}
