//! Dense small-matrix linear algebra.
//!
//! Matrices here are at most a few dozen rows, so everything is stored
//! row-major in a single `Vec` and factorized with plain O(n^3) loops.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (max relative asymmetry above tolerance)")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `diag(d) * self`
    pub fn scale_rows(&self, d: &[T]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| d[i] * self[(i, j)])
    }

    /// `self * diag(d)`
    pub fn scale_cols(&self, d: &[T]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.sub(rhs).max_abs()
    }

    /// `(A + A^T) / 2`
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    /// Symmetry up to `rel_tol * max|a_ij|`.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(T::min_positive_value());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Sub-block with the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn quad_form(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.mul_vec(y))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: Copy> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Copy> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.rows {
            list.entry(&&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        list.finish()
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Relative pivot threshold used by the positive-definiteness test.
pub const PIVOT_REL_TOL: f64 = 1e-12;

/// `P A P^T = L D L^T` with symmetric (diagonal) pivoting.
///
/// Only succeeds on positive definite input: a pivot at or below
/// `1e-12 * max_i a_ii` rejects the matrix.
#[derive(Debug, Clone, Default)]
pub struct SymmetricFactor<T> {
    n: usize,
    /// Working copy; its strict lower triangle holds `L` in pivoted order.
    work: Vec<T>,
    pivots: Vec<T>,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    scratch: Vec<T>,
}

impl<T: Real> SymmetricFactor<T> {
    /// Factorizes a matrix that the caller already knows to be symmetric.
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let mut f = Self {
            n: 0,
            work: Vec::new(),
            pivots: Vec::new(),
            perm: Vec::new(),
            scratch: Vec::new(),
        };
        f.refactor(a.rows(), a.as_slice())?;
        Ok(f)
    }

    /// Refactorizes a row-major `n x n` matrix in place, reusing buffers.
    pub fn refactor(&mut self, n: usize, a: &[T]) -> Result<(), LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::DimensionMismatch {
                expected: n * n,
                got: a.len(),
            });
        }
        self.n = n;
        self.work.clear();
        self.work.extend_from_slice(a);
        self.perm.clear();
        self.perm.extend(0..n);
        self.pivots.clear();
        let w = &mut self.work;
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(w[i * n + i]));
        let threshold = T::lit(PIVOT_REL_TOL) * max_diag;
        if n > 0 && !(max_diag > T::zero()) {
            return Err(LinalgError::NotPositiveDefinite { pivot: 0 });
        }
        for k in 0..n {
            let mut q = k;
            for i in (k + 1)..n {
                if w[i * n + i] > w[q * n + q] {
                    q = i;
                }
            }
            if q != k {
                for c in 0..n {
                    w.swap(k * n + c, q * n + c);
                }
                for r in 0..n {
                    w.swap(r * n + k, r * n + q);
                }
                self.perm.swap(k, q);
            }
            let d = w[k * n + k];
            if !(d > threshold) {
                return Err(LinalgError::NotPositiveDefinite { pivot: k });
            }
            self.pivots.push(d);
            for i in (k + 1)..n {
                w[i * n + k] /= d;
            }
            for i in (k + 1)..n {
                let lik = w[i * n + k];
                for j in (k + 1)..=i {
                    let update = lik * w[j * n + k] * d;
                    w[i * n + j] -= update;
                    w[j * n + i] = w[i * n + j];
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[T] {
        &self.pivots
    }

    pub fn det(&self) -> T {
        self.pivots.iter().fold(T::one(), |p, &d| p * d)
    }

    pub fn log_det(&self) -> T {
        self.pivots.iter().map(|d| d.ln()).sum()
    }

    /// Ratio of extreme pivots; a cheap lower estimate of the condition number.
    pub fn pivot_ratio(&self) -> T {
        let (lo, hi) = self
            .pivots
            .iter()
            .fold((T::infinity(), T::zero()), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if self.n == 0 {
            T::one()
        } else {
            hi / lo
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        let mut z = Vec::with_capacity(self.n);
        self.solve_with(b, &mut z, &mut x);
        x
    }

    /// Allocation-free solve; `z` is scratch space.
    pub fn solve_with(&self, b: &[T], z: &mut Vec<T>, x: &mut [T]) {
        let n = self.n;
        assert_eq!(b.len(), n, "solve: rhs length mismatch");
        let l = &self.work;
        z.clear();
        z.extend(self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= l[i * n + j] * z[j];
            }
            z[i] = s;
        }
        for i in 0..n {
            z[i] /= self.pivots[i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= l[j * n + i] * z[j];
            }
            z[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
    }

    /// Solve reusing the factor's own scratch buffer.
    pub fn solve_into(&mut self, b: &[T], x: &mut [T]) {
        let mut z = std::mem::take(&mut self.scratch);
        self.solve_with(b, &mut z, x);
        self.scratch = z;
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }
}

/// LU factorization with partial pivoting, for the non-symmetric `K` matrices.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = a.max_abs();
        let tiny = T::epsilon() * scale * T::lit(n.max(1) as f64);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn det(&self) -> T {
        (0..self.n).fold(self.sign, |p, i| p * self.lu[i * self.n + i])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n, "solve: rhs length mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = self.lu[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn ldl_reconstructs_and_inverts() {
        let a = m(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, -0.2], &[0.5, -0.2, 5.0]]);
        let f = SymmetricFactor::new(&a).unwrap();
        let inv = f.inverse();
        let prod = a.matmul(&inv);
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-14);
        // det by cofactor expansion
        let det = 4.0 * (15.0 - 0.04) - 1.0 * (5.0 + 0.1) + 0.5 * (-0.2 - 1.5);
        assert!((f.det() - det).abs() < 1e-12);
    }

    #[test]
    fn ldl_rejects_indefinite() {
        let a = m(&[&[1.0, -2.0], &[-2.0, 1.0]]);
        assert!(matches!(
            SymmetricFactor::new(&a),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
        assert!(SymmetricFactor::new(&m(&[&[0.0]])).is_err());
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let a = m(&[&[0.0, 2.0], &[1.0, 1.0]]);
        let lu = Lu::new(&a).unwrap();
        assert!((lu.det() + 2.0).abs() < 1e-15);
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(matches!(
            Lu::new(&m(&[&[1.0, 2.0], &[2.0, 4.0]])),
            Err(LinalgError::Singular)
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let f = SymmetricFactor::new(&a).unwrap();
        assert!((f.det() - 3.0).abs() < 1e-6);
    }
}
