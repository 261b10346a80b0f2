use crate::error::{arg, Result};
use crate::scalar::{RealScalar, Scalar};
use num_traits::{Float, Zero};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Dense row-major matrix over a [`Scalar`] field.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Scalar> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != rows * cols {
            return arg(format!(
                "{} entries cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return arg("ragged rows");
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn diag(values: &[E]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Column vector from entries.
    pub fn column(values: &[E]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    /// Rank-one operator `|u⟩⟨v|`.
    pub fn outer(u: &[E], v: &[E]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[E]) {
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map<F: Scalar>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: E) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: E::Real) -> Self {
        self.map(|z| z.scale(s))
    }

    pub fn trace(&self) -> E {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimensions");
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![E::zero(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == E::zero() {
                    continue;
                }
                let brow = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    /// `self† · rhs` without forming the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_matmul inner dimensions");
        let (k, n, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![E::zero(); n * m];
        for p in 0..k {
            let arow = &self.data[p * n..(p + 1) * n];
            let brow = &rhs.data[p * m..(p + 1) * m];
            for (i, &a) in arow.iter().enumerate() {
                let a = a.conj();
                if a == E::zero() {
                    continue;
                }
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    pub fn matvec(&self, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len(), "matvec dimensions");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut data = vec![E::zero(); r * c];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == E::zero() {
                    continue;
                }
                for k in 0..rhs.rows {
                    let row = i * rhs.rows + k;
                    let base = row * c + j * rhs.cols;
                    for l in 0..rhs.cols {
                        data[base + l] = a * rhs.data[k * rhs.cols + l];
                    }
                }
            }
        }
        Self { rows: r, cols: c, data }
    }

    /// Frobenius inner product `Tr(self† · rhs)`.
    pub fn inner(&self, rhs: &Self) -> E {
        assert_eq!(self.data.len(), rhs.data.len(), "inner product dimensions");
        self.data.iter().zip(&rhs.data).map(|(&a, &b)| a.conj() * b).sum()
    }

    /// `Tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> E {
        assert_eq!(self.cols, rhs.rows);
        assert_eq!(self.rows, rhs.cols);
        let mut acc = E::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * rhs.data[k * rhs.cols + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> E::Real {
        self.data.iter().fold(E::Real::zero(), |m, z| m.max(z.modulus()))
    }

    pub fn frobenius_norm(&self) -> E::Real {
        self.data.iter().map(|z| z.norm_sqr()).sum::<E::Real>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_defect(&self) -> E::Real {
        if !self.is_square() {
            return E::Real::infinity();
        }
        let mut worst = E::Real::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).modulus());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: E::Real) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = E::Real::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()).scale(half))
    }

    /// `‖self − rhs‖_max`.
    pub fn max_abs_diff(&self, rhs: &Self) -> E::Real {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(E::Real::zero(), |m, (&a, &b)| m.max((a - b).modulus()))
    }

    /// Accumulates `s · rhs` into `self`.
    pub fn axpy(&mut self, s: E, rhs: &Self) {
        assert_eq!(self.data.len(), rhs.data.len());
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += s * b;
        }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl<E: Scalar> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E: Scalar> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<E: Scalar> Add for &Matrix<E> {
    type Output = Matrix<E>;
    fn add(self, rhs: Self) -> Matrix<E> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<E: Scalar> Sub for &Matrix<E> {
    type Output = Matrix<E>;
    fn sub(self, rhs: Self) -> Matrix<E> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<E: Scalar> Mul for &Matrix<E> {
    type Output = Matrix<E>;
    fn mul(self, rhs: Self) -> Matrix<E> {
        self.matmul(rhs)
    }
}

impl<E: Scalar> Neg for &Matrix<E> {
    type Output = Matrix<E>;
    fn neg(self) -> Matrix<E> {
        self.map(|z| -z)
    }
}

impl<E: Scalar> Add for Matrix<E> {
    type Output = Matrix<E>;
    fn add(self, rhs: Self) -> Matrix<E> {
        &self + &rhs
    }
}

impl<E: Scalar> Sub for Matrix<E> {
    type Output = Matrix<E>;
    fn sub(self, rhs: Self) -> Matrix<E> {
        &self - &rhs
    }
}

/// Euclidean norm of a vector.
pub fn vec_norm<E: Scalar>(v: &[E]) -> E::Real {
    v.iter().map(|z| z.norm_sqr()).sum::<E::Real>().sqrt()
}

/// `⟨u|v⟩` (antilinear in the first argument).
pub fn vec_inner<E: Scalar>(u: &[E], v: &[E]) -> E {
    u.iter().zip(v).map(|(&a, &b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn matmul_and_adjoint_matmul_agree() {
        let a = Matrix::from_fn(3, 2, |i, j| C::new(i as f64 + 1.0, j as f64 - 0.5));
        let b = Matrix::from_fn(3, 4, |i, j| C::new((i * j) as f64, 1.0));
        let direct = a.adjoint().matmul(&b);
        let fused = a.adjoint_matmul(&b);
        assert!(direct.max_abs_diff(&fused) < 1e-14);
    }

    #[test]
    fn kron_matches_naive_definition() {
        let a = Matrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64);
        let b = Matrix::from_fn(3, 2, |i, j| (i as f64) - (j as f64) * 0.5);
        let k = a.kron(&b);
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = Matrix::from_fn(4, 4, |i, j| C::new(i as f64, j as f64));
        let b = Matrix::from_fn(4, 4, |i, j| C::new(1.0 / (1.0 + i as f64 + j as f64), 0.3));
        let t = a.matmul(&b).trace();
        assert!((t - a.trace_product(&b)).norm() < 1e-12);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Matrix::<f64>::from_vec(2, 2, vec![1.0; 3]).is_err());
    }
}
