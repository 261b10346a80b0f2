//! One-sided Jacobi singular value decomposition and derived utilities.

use super::matrix::{vec_inner, vec_norm, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};
use num_traits::{Float, One, Zero};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(σ) V†` with `k = min(rows, cols)` singular values,
/// sorted descending. Columns of `U` and `V` belonging to zero singular
/// values are not guaranteed to be orthonormal.
#[derive(Clone, Debug)]
pub struct Svd<E: Scalar> {
    pub u: Matrix<E>,
    pub sigma: Vec<E::Real>,
    pub v: Matrix<E>,
}

pub fn svd<E: Scalar>(a: &Matrix<E>) -> Result<Svd<E>> {
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<E>> = (0..n).map(|j| a.col(j)).collect();
    let mut vcols: Vec<Vec<E>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { E::one() } else { E::zero() }).collect())
        .collect();
    let eps = E::Real::epsilon();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: E::Real = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: E::Real = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = vec_inner(&cols[p], &cols[q]);
                let g = gamma.modulus();
                if g == E::Real::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = gamma.phase().conj();
                let zeta = (beta - alpha) / (E::Real::lit(2.0) * g);
                let sign = if zeta >= E::Real::zero() { E::Real::one() } else { -E::Real::one() };
                let t = sign / (zeta.abs() + (E::Real::one() + zeta * zeta).sqrt());
                let c = (E::Real::one() + t * t).sqrt().recip();
                let s = c * t;
                rotate(&mut cols, p, q, ph, c, s, m);
                rotate(&mut vcols, p, q, ph, c, s, n);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Convergence("Jacobi SVD exceeded its sweep budget".into()));
    }
    let mut sigma: Vec<E::Real> = cols.iter().map(|c| vec_norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let sorted: Vec<E::Real> = order.iter().map(|&i| sigma[i]).collect();
    for (k, &i) in order.iter().enumerate() {
        let s = sigma[i];
        let col: Vec<E> = if s > E::Real::zero() {
            cols[i].iter().map(|z| z.scale(s.recip())).collect()
        } else {
            cols[i].clone()
        };
        u.set_col(k, &col);
        v.set_col(k, &vcols[i]);
    }
    sigma = sorted;
    Ok(Svd { u, sigma, v })
}

/// Rotates columns `p` and `q` after rephasing `q` by `ph`.
fn rotate<E: Scalar>(cols: &mut [Vec<E>], p: usize, q: usize, ph: E, c: E::Real, s: E::Real, len: usize) {
    for i in 0..len {
        let up = cols[p][i];
        let uq = cols[q][i] * ph;
        cols[p][i] = up.scale(c) - uq.scale(s);
        cols[q][i] = up.scale(s) + uq.scale(c);
    }
}

/// Number of singular values above `rcond · σ_max`.
pub fn numerical_rank<E: Scalar>(a: &Matrix<E>, rcond: E::Real) -> Result<usize> {
    let s = svd(a)?;
    let cutoff = rcond * s.sigma.first().copied().unwrap_or_else(E::Real::zero);
    Ok(s.sigma.iter().filter(|&&x| x > cutoff && x > E::Real::zero()).count())
}

/// Moore–Penrose pseudo-inverse together with the retained singular values.
#[derive(Clone, Debug)]
pub struct PseudoInverse<E: Scalar> {
    pub matrix: Matrix<E>,
    pub rank: usize,
    /// σ_max / σ_min over retained singular values.
    pub condition: E::Real,
}

pub fn pinv<E: Scalar>(a: &Matrix<E>, rcond: E::Real) -> Result<PseudoInverse<E>> {
    let s = svd(a)?;
    let smax = s.sigma.first().copied().unwrap_or_else(E::Real::zero);
    let cutoff = rcond * smax;
    let (m, n) = (a.rows(), a.cols());
    let mut out = Matrix::zeros(n, m);
    let mut rank = 0;
    let mut smin = smax;
    for (k, &sk) in s.sigma.iter().enumerate() {
        if !(sk > cutoff) || sk == E::Real::zero() {
            continue;
        }
        rank += 1;
        smin = smin.min(sk);
        let inv = sk.recip();
        for i in 0..n {
            let vi = s.v[(i, k)].scale(inv);
            for j in 0..m {
                out[(i, j)] += vi * s.u[(j, k)].conj();
            }
        }
    }
    let condition = if rank == 0 { <E::Real as num_traits::Float>::infinity() } else { smax / smin };
    Ok(PseudoInverse { matrix: out, rank, condition })
}
