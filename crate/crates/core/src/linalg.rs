//! Minimal dense linear algebra: a column-major matrix, Cholesky and a
//! Householder thin-QR basis. Only what the test statistics need.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == p), "ragged rows");
        Self::from_fn(n, p, |i, j| rows[i][j])
    }

    /// Wraps column-major storage.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Copies a row-major buffer, transposing in cache-sized tiles.
    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has the wrong length");
        const TILE: usize = 32;
        let mut out = vec![T::zero(); rows * cols];
        for i0 in (0..rows).step_by(TILE) {
            for j0 in (0..cols).step_by(TILE) {
                for i in i0..(i0 + TILE).min(rows) {
                    for j in j0..(j0 + TILE).min(cols) {
                        out[j * rows + i] = data[i * cols + j];
                    }
                }
            }
        }
        Self { rows, cols, data: out }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    /// Copies columns `range` into a new matrix.
    pub fn column_block(&self, range: std::ops::Range<usize>) -> Self {
        assert!(range.end <= self.cols);
        let data = self.data[range.start * self.rows..range.end * self.rows].to_vec();
        Self {
            rows: self.rows,
            cols: range.len(),
            data,
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o = *o + a * vj;
            }
        }
        out
    }

    /// `selfᵀ · v`, one dot product per column.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_into(v, &mut out);
        out
    }

    pub fn tr_mul_vec_into(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        for (o, c) in out.iter_mut().zip(self.columns()) {
            *o = dot(c, v);
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&col);
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn tr_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j)))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    // four independent accumulators
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] = acc[0] + a[k] * b[k];
        acc[1] = acc[1] + a[k + 1] * b[k + 1];
        acc[2] = acc[2] + a[k + 2] * b[k + 2];
        acc[3] = acc[3] + a[k + 3] * b[k + 3];
    }
    let mut tail = T::zero();
    for k in 4 * chunks..a.len() {
        tail = tail + a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

/// Lower Cholesky factor `L` with `A = L·Lᵀ`.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky of a {}x{} matrix",
            n,
            a.cols()
        )));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` for lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s = s - l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Orthonormal basis of `col(A)` via Householder reflections.
///
/// Fails with `RankDeficientNuisance` when some `|R_jj|` falls below
/// `tol · max column norm`.
pub fn orthonormal_basis<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, q) = (a.rows(), a.cols());
    if q == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    if q > n {
        return Err(Error::RankDeficientNuisance { rank: n, q });
    }
    let max_norm = a
        .columns()
        .map(|c| norm_sq(c).sqrt())
        .fold(T::zero(), T::max);
    let tol = T::rank_tolerance(n) * max_norm;
    let two = T::lit(2.0);

    let mut work = a.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(q);
    for j in 0..q {
        let x = &work.col(j)[j..];
        let xnorm = norm_sq(x).sqrt();
        if xnorm <= tol {
            return Err(Error::RankDeficientNuisance { rank: j, q });
        }
        let alpha = if x[0] > T::zero() { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] = v[0] - alpha;
        let vnorm = norm_sq(&v).sqrt();
        if vnorm > T::zero() {
            for vi in &mut v {
                *vi = *vi / vnorm;
            }
        }
        for c in j..q {
            let col = &mut work.col_mut(c)[j..];
            let proj = two * dot(&v, col);
            for (ci, &vi) in col.iter_mut().zip(&v) {
                *ci = *ci - proj * vi;
            }
        }
        reflectors.push(v);
    }

    let mut basis = Matrix::zeros(n, q);
    for j in 0..q {
        basis[(j, j)] = T::one();
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        for c in 0..q {
            let col = &mut basis.col_mut(c)[j..];
            let proj = two * dot(v, col);
            if proj != T::zero() {
                for (ci, &vi) in col.iter_mut().zip(v) {
                    *ci = *ci - proj * vi;
                }
            }
        }
    }
    Ok(basis)
}
