//! Small dense matrices.
//!
//! Everything here is sized for phase spaces of a few dozen dimensions:
//! row-major storage, LU with partial pivoting, no blocking. The two
//! structural helpers [`bracket`] and [`skew_part`] are the building
//! blocks of the symplectic defect decomposition in [`crate::defect`].

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative pivot tolerance of the LU factorization, scaled by `‖A‖_F`.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { op: "from_vec", left: (rows, cols), right: (data.len(), 1) });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    ///
    /// Panics on ragged input; intended for literals.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            assert_eq!(r.as_ref().len(), m, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: n, cols: m, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mat_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(self.mismatch("mat_mul", rhs));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch { op: "mat_vec", left: (self.rows, self.cols), right: (v.len(), 1) });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with("add", rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with("sub", rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `k`-th power by repeated multiplication; `A⁰ = I`.
    pub fn mat_pow(&self, k: u32) -> Result<Matrix> {
        if !self.is_square() {
            return Err(self.not_square("mat_pow"));
        }
        if k > 64 {
            return Err(Error::InvalidArgument("mat_pow exponent above 64"));
        }
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = out.mat_mul(self)?;
        }
        Ok(out)
    }

    pub fn determinant(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(self.not_square("determinant"));
        }
        match Lu::factor(self) {
            Ok(lu) => Ok(lu.determinant()),
            // An exactly rank-deficient matrix still has a determinant.
            Err(Error::Singular { .. }) => Ok(Lu::factor_unchecked(self).determinant()),
            Err(e) => Err(e),
        }
    }

    /// Copies the `size`×`size` sub-block starting at `(r0, c0)`.
    pub fn sub_block(&self, r0: usize, c0: usize, size: usize) -> Matrix {
        Matrix::from_fn(size, size, |i, j| self[(r0 + i, c0 + j)])
    }

    fn zip_with(&self, op: &'static str, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(self.mismatch(op, rhs));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    fn mismatch(&self, op: &'static str, rhs: &Matrix) -> Error {
        Error::DimensionMismatch { op, left: (self.rows, self.cols), right: (rhs.rows, rhs.cols) }
    }

    fn not_square(&self, op: &'static str) -> Error {
        Error::NotSquare { op, rows: self.rows, cols: self.cols }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `PA = LU` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: Matrix,
    perm: Vec<usize>,
    odd_swaps: bool,
}

impl Lu {
    /// Factors `a`, rejecting pivots below `1e-14·‖a‖_F`.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(a.not_square("lu"));
        }
        let tol = SINGULAR_RTOL * a.frobenius_norm();
        let lu = Self::factor_unchecked(a);
        for k in 0..a.rows {
            let mag = lu.packed[(k, k)].abs();
            if !(mag > tol) {
                return Err(Error::Singular { pivot: k, magnitude: mag, tolerance: tol });
            }
        }
        Ok(lu)
    }

    fn factor_unchecked(a: &Matrix) -> Self {
        let n = a.rows;
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd_swaps = false;
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if m[(i, k)].abs() > m[(p, k)].abs() {
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    m.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd_swaps = !odd_swaps;
            }
            let pivot = m[(k, k)];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let factor = m[(i, k)] / pivot;
                m[(i, k)] = factor;
                for j in k + 1..n {
                    m.data[i * n + j] -= factor * m.data[k * n + j];
                }
            }
        }
        Self { packed: m, perm, odd_swaps }
    }

    pub fn determinant(&self) -> f64 {
        let n = self.packed.rows;
        let d: f64 = (0..n).map(|k| self.packed[(k, k)]).product();
        if self.odd_swaps {
            -d
        } else {
            d
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.packed.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch { op: "lu_solve", left: (n, n), right: (b.len(), 1) });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.packed[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.packed[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.packed[(i, i)];
        }
        Ok(x)
    }
}

/// Solves `Ax = b` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

/// `[R, S] = RᵀS − SᵀR`, skew-symmetric by construction.
pub fn bracket(r: &Matrix, s: &Matrix) -> Result<Matrix> {
    if !r.is_square() {
        return Err(r.not_square("bracket"));
    }
    if r.rows != s.rows || r.cols != s.cols {
        return Err(r.mismatch("bracket", s));
    }
    let n = r.rows;
    // Entry (i,j) of RᵀS is Σ_k R[k,i]·S[k,j]; form both products in one pass
    // so that (i,j) and (j,i) see identical rounding and the result is exactly skew.
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let mut rs = 0.0;
            let mut sr = 0.0;
            for k in 0..n {
                rs += r[(k, i)] * s[(k, j)];
                sr += s[(k, i)] * r[(k, j)];
            }
            out[(i, j)] = rs - sr;
            out[(j, i)] = sr - rs;
        }
    }
    Ok(out)
}

/// Skew-symmetric part `(A − Aᵀ)/2`.
pub fn skew_part(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(a.not_square("skew_part"));
    }
    Ok(Matrix::from_fn(a.rows, a.cols, |i, j| 0.5 * (a[(i, j)] - a[(j, i)])))
}

/// The canonical structure matrix `J = [[O, I], [−I, O]]` of size `2N`.
pub fn symplectic_j(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// The four `N×N` blocks of a `2N×2N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Block2x2 {
    pub tl: Matrix,
    pub tr: Matrix,
    pub bl: Matrix,
    pub br: Matrix,
}

impl Block2x2 {
    pub fn split(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(m.not_square("block split"));
        }
        if !m.rows.is_multiple_of(2) {
            return Err(Error::InvalidArgument("block split needs an even dimension"));
        }
        let n = m.rows / 2;
        Ok(Self {
            tl: m.sub_block(0, 0, n),
            tr: m.sub_block(0, n, n),
            bl: m.sub_block(n, 0, n),
            br: m.sub_block(n, n, n),
        })
    }

    pub fn from_blocks(tl: Matrix, tr: Matrix, bl: Matrix, br: Matrix) -> Result<Self> {
        let n = tl.rows;
        for b in [&tl, &tr, &bl, &br] {
            if b.rows != n || b.cols != n {
                return Err(tl.mismatch("block assemble", b));
            }
        }
        Ok(Self { tl, tr, bl, br })
    }

    pub fn dim(&self) -> usize {
        self.tl.rows
    }

    pub fn assemble(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => self.tl[(i, j)],
            (true, false) => self.tr[(i, j - n)],
            (false, true) => self.bl[(i - n, j)],
            (false, false) => self.br[(i - n, j - n)],
        })
    }
}
