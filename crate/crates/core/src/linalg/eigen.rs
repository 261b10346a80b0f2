//! Hermitian eigendecomposition.
//!
//! Householder reduction to Hermitian tridiagonal form, a diagonal phase
//! change that makes the off-diagonal real, then implicit QL iterations
//! (the EISPACK `tql2` scheme) with the rotations applied straight to the
//! accumulated unitary.

use super::matrix::Matrix;
use crate::error::{arg, Error, Result};
use crate::scalar::{RealScalar, Scalar};
use num_traits::{Float, One, Zero};

const MAX_QL_ITERATIONS: usize = 64;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen<E: Scalar> {
    pub values: Vec<E::Real>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix<E>,
}

impl<E: Scalar> HermitianEigen<E> {
    pub fn min_value(&self) -> E::Real {
        self.values.first().copied().unwrap_or_else(E::Real::zero)
    }

    pub fn max_value(&self) -> E::Real {
        self.values.last().copied().unwrap_or_else(E::Real::zero)
    }

    /// Rebuilds `Σ f(λ_k) |v_k⟩⟨v_k|`.
    pub fn reconstruct_with(&self, f: impl Fn(E::Real) -> E::Real) -> Matrix<E> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let w = f(self.values[k]);
            for i in 0..n {
                scaled[(i, k)] = scaled[(i, k)].scale(w);
            }
        }
        scaled.matmul(&self.vectors.adjoint())
    }
}

/// Diagonalizes a Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigen<E: Scalar>(m: &Matrix<E>) -> Result<HermitianEigen<E>> {
    if !m.is_square() {
        return arg(format!("eigendecomposition needs a square matrix, got {}x{}", m.rows(), m.cols()));
    }
    if !m.is_finite() {
        return arg("eigendecomposition input contains non-finite entries");
    }
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    let mut a = Matrix::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)].conj() });
    let mut q = Matrix::<E>::identity(n);
    tridiagonalize(&mut a, &mut q);

    let mut diag: Vec<E::Real> = (0..n).map(|i| a[(i, i)].re()).collect();
    let mut off = vec![E::Real::zero(); n];
    let mut phase = E::one();
    for i in 0..n.saturating_sub(1) {
        let e = a[(i + 1, i)];
        off[i] = e.modulus();
        phase *= e.phase();
        // Column i+1 of Q·D picks up the accumulated phase.
        for r in 0..n {
            q[(r, i + 1)] *= phase;
        }
    }
    tql2(&mut diag, &mut off, &mut q)?;
    sort_ascending(&mut diag, &mut q);
    Ok(HermitianEigen { values: diag, vectors: q })
}

/// Eigenvalues only.
pub fn hermitian_eigenvalues<E: Scalar>(m: &Matrix<E>) -> Result<Vec<E::Real>> {
    Ok(hermitian_eigen(m)?.values)
}

/// Applies a real function to a Hermitian matrix through its spectrum.
pub fn hermitian_fn<E: Scalar>(m: &Matrix<E>, f: impl Fn(E::Real) -> E::Real) -> Result<Matrix<E>> {
    Ok(hermitian_eigen(m)?.reconstruct_with(f))
}

/// Positive square root of a PSD matrix; small negative eigenvalues are clipped.
pub fn psd_sqrt<E: Scalar>(m: &Matrix<E>) -> Result<Matrix<E>> {
    hermitian_fn(m, |x| x.max(E::Real::zero()).sqrt())
}

fn tridiagonalize<E: Scalar>(a: &mut Matrix<E>, q: &mut Matrix<E>) {
    let n = a.rows();
    let two = E::Real::lit(2.0);
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<E> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = super::matrix::vec_norm(&x);
        let tail: E::Real = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if xnorm == E::Real::zero() || tail == E::Real::zero() {
            continue;
        }
        let alpha = -x[0].phase().scale(xnorm);
        let mut v = x;
        v[0] -= alpha;
        let vnorm = super::matrix::vec_norm(&v);
        for z in v.iter_mut() {
            *z = z.scale(vnorm.recip());
        }
        // Trailing block B ← H B H with H = I − 2vv†.
        let p: Vec<E> = (0..len)
            .map(|i| (0..len).map(|j| a[(k + 1 + i, k + 1 + j)] * v[j]).sum())
            .collect();
        let kappa = super::matrix::vec_inner(&v, &p).re();
        let four_kappa = E::from_real(kappa * two * two);
        let two_e = E::from_real(two);
        for i in 0..len {
            for j in 0..len {
                let vi = v[i];
                let vj = v[j].conj();
                let upd = two_e * (vi * p[j].conj() + p[i] * vj) - four_kappa * vi * vj;
                a[(k + 1 + i, k + 1 + j)] -= upd;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[(i, k)] = E::zero();
            a[(k, i)] = E::zero();
        }
        // Q ← Q H.
        for r in 0..q.rows() {
            let s: E = (0..len).map(|j| q[(r, k + 1 + j)] * v[j]).sum();
            let s = s * two_e;
            for j in 0..len {
                let vj = v[j].conj();
                q[(r, k + 1 + j)] -= s * vj;
            }
        }
    }
}

/// Implicit QL on a real symmetric tridiagonal matrix (`d` diagonal,
/// `e[i]` coupling `i` and `i+1`); rotations are applied to the columns of `v`.
fn tql2<E: Scalar>(d: &mut [E::Real], e: &mut [E::Real], v: &mut Matrix<E>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let zero = E::Real::zero();
    let one = E::Real::one();
    let two = E::Real::lit(2.0);
    let eps = E::Real::epsilon();
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Convergence(format!(
                        "tridiagonal QL did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..v.rows() {
                        let hk = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = vk.scale(s) + hk.scale(c);
                        v[(k, i)] = vk.scale(c) - hk.scale(s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

fn sort_ascending<E: Scalar>(d: &mut [E::Real], v: &mut Matrix<E>) {
    let n = d.len();
    for i in 0..n {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for r in 0..v.rows() {
                let t = v[(r, i)];
                v[(r, i)] = v[(r, k)];
                v[(r, k)] = t;
            }
        }
    }
}

/// Largest eigen-residual `max_k ‖M v_k − λ_k v_k‖`.
pub fn eigen_residual<E: Scalar>(m: &Matrix<E>, eig: &HermitianEigen<E>) -> E::Real {
    let n = eig.values.len();
    let mut worst = E::Real::zero();
    for k in 0..n {
        let vk = eig.vectors.col(k);
        let mv = m.matvec(&vk);
        let r: E::Real = mv
            .iter()
            .zip(&vk)
            .map(|(&a, &b)| (a - b.scale(eig.values[k])).norm_sqr())
            .sum::<E::Real>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn random_hermitian(n: usize, seed: u64) -> Matrix<C> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = Matrix::from_fn(n, n, |_, _| C::new(next(), next()));
        (&g + &g.adjoint()).scale_real(0.5)
    }

    #[test]
    fn residuals_small_for_random_hermitian() {
        for n in [1, 2, 3, 5, 8, 17] {
            let m = random_hermitian(n, n as u64);
            let eig = hermitian_eigen(&m).unwrap();
            assert!(eigen_residual(&m, &eig) < 1e-12 * (1.0 + m.max_abs()));
            let unit = eig.vectors.adjoint_matmul(&eig.vectors);
            assert!(unit.max_abs_diff(&Matrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn diagonal_input() {
        let m = Matrix::diag(&[3.0, -1.0, 2.0]);
        let eig = hermitian_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = Matrix::from_rows(&[vec![C::new(0.0, 0.0), C::new(0.0, -1.0)], vec![C::new(0.0, 1.0), C::new(0.0, 0.0)]])
            .unwrap();
        let v = hermitian_eigenvalues(&y).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f32_path_works() {
        let m = Matrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]).unwrap();
        let v = hermitian_eigenvalues(&m).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-6 && (v[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn sqrt_squares_back() {
        let g = random_hermitian(6, 42);
        let psd = g.matmul(&g);
        let r = psd_sqrt(&psd).unwrap();
        assert!(r.matmul(&r).max_abs_diff(&psd) < 1e-12);
    }
}
