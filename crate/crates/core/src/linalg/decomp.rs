//! Cholesky factorization and column-pivoted QR.

use super::matrix::Matrix;
use crate::error::{arg, Error, Result};
use crate::scalar::Scalar;
use num_traits::{Float, Zero};

/// Lower-triangular `L` with `A = L L†`.
#[derive(Clone, Debug)]
pub struct Cholesky<E: Scalar> {
    l: Matrix<E>,
}

impl<E: Scalar> Cholesky<E> {
    pub fn factor(a: &Matrix<E>) -> Result<Self> {
        if !a.is_square() {
            return arg("Cholesky needs a square matrix");
        }
        let n = a.rows();
        let mut l = Matrix::<E>::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)].re();
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if !(diag > E::Real::zero()) {
                return Err(Error::NumericalConsistency(format!(
                    "matrix is not positive definite (pivot {j})"
                )));
            }
            let djj = diag.sqrt();
            l[(j, j)] = E::from_real(djj);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s.scale(djj.recip());
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &Matrix<E> {
        &self.l
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[E]) -> Vec<E> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Result of Householder QR with column pivoting.
#[derive(Clone, Debug)]
pub struct PivotedQr<E: Scalar> {
    /// Column order chosen by pivoting.
    pub permutation: Vec<usize>,
    /// `|R_kk|` in pivot order (non-increasing).
    pub r_diag: Vec<E::Real>,
}

impl<E: Scalar> PivotedQr<E> {
    /// Number of pivots with `|R_kk| > tol · |R_00|`.
    pub fn rank(&self, tol: E::Real) -> usize {
        let top = self.r_diag.first().copied().unwrap_or_else(E::Real::zero);
        self.r_diag.iter().take_while(|&&r| r > tol * top && r > E::Real::zero()).count()
    }

    /// Indices of the leading `rank` columns, sorted ascending.
    pub fn independent_columns(&self, tol: E::Real) -> Vec<usize> {
        let mut idx = self.permutation[..self.rank(tol)].to_vec();
        idx.sort_unstable();
        idx
    }
}

pub fn pivoted_qr<E: Scalar>(a: &Matrix<E>) -> PivotedQr<E> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<E>> = (0..n).map(|j| a.col(j)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut r_diag = Vec::with_capacity(m.min(n));
    for k in 0..m.min(n) {
        let norms: Vec<E::Real> =
            cols[k..].iter().map(|c| c[k..].iter().map(|z| z.norm_sqr()).sum()).collect();
        let (best, _) = norms
            .iter()
            .enumerate()
            .fold((0, E::Real::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        cols.swap(k, k + best);
        perm.swap(k, k + best);
        let x = &cols[k][k..];
        let xnorm = super::matrix::vec_norm(x);
        r_diag.push(xnorm);
        if xnorm == E::Real::zero() {
            continue;
        }
        let alpha = -x[0].phase().scale(xnorm);
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = super::matrix::vec_norm(&v);
        if vnorm == E::Real::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = z.scale(vnorm.recip());
        }
        for c in cols.iter_mut().skip(k) {
            let s: E = v.iter().zip(&c[k..]).map(|(&vi, &ci)| vi.conj() * ci).sum();
            let s = s + s;
            for (ci, &vi) in c[k..].iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
    }
    PivotedQr { permutation: perm, r_diag }
}
