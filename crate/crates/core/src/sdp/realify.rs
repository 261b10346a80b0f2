use super::problem::{Constraint, SdpProblem};
use crate::error::{arg, Result};
use crate::linalg::Matrix;
use crate::scalar::{RealScalar, Scalar};
use num_complex::Complex;

/// Equality `Σ_k Tr[A_k X_k] = rhs` with Hermitian `A_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianConstraint<T: RealScalar>
where
    Complex<T>: Scalar<Real = T>,
{
    pub terms: Vec<(usize, Matrix<Complex<T>>)>,
    pub rhs: T,
    pub label: String,
}

/// SDP over complex Hermitian blocks: minimize `Σ Tr[C_k X_k]` subject to
/// the equalities and `X_k ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianProgram<T: RealScalar>
where
    Complex<T>: Scalar<Real = T>,
{
    pub name: String,
    pub blocks: Vec<usize>,
    pub objective: Vec<Matrix<Complex<T>>>,
    pub constraints: Vec<HermitianConstraint<T>>,
}

impl<T: RealScalar> HermitianProgram<T>
where
    Complex<T>: Scalar<Real = T>,
{
    pub fn new(name: impl Into<String>, blocks: Vec<usize>) -> Self {
        let objective = blocks.iter().map(|&n| Matrix::zeros(n, n)).collect();
        Self { name: name.into(), blocks, objective, constraints: Vec::new() }
    }

    fn check(&self, k: usize, m: &Matrix<Complex<T>>, what: &str) -> Result<()> {
        let Some(&n) = self.blocks.get(k) else {
            return arg(format!("{what}: block {k} does not exist"));
        };
        if m.rows() != n || m.cols() != n {
            return arg(format!("{what}: block {k} needs a {n}x{n} matrix"));
        }
        let scale = T::one().max(m.max_abs());
        if !m.is_finite() || m.hermiticity_defect() > T::lit(1e-12) * scale {
            return arg(format!("{what}: block {k} is not Hermitian"));
        }
        Ok(())
    }

    /// Real symmetric program with the same optimal value.
    ///
    /// A Hermitian `n×n` block `X = P + iQ` becomes the `2n×2n` block
    /// `[[P, −Q], [Q, P]]`; coefficients are embedded the same way and halved,
    /// so `Tr[A X]` is preserved exactly.
    pub fn realify(&self) -> Result<SdpProblem<T>> {
        if self.objective.len() != self.blocks.len() {
            return arg("one objective matrix per block required");
        }
        for (k, c) in self.objective.iter().enumerate() {
            self.check(k, c, "objective")?;
        }
        let mut out = SdpProblem::new(self.name.clone(), self.blocks.iter().map(|n| 2 * n).collect());
        out.objective = self.objective.iter().map(|c| embed_half(c)).collect();
        for (i, c) in self.constraints.iter().enumerate() {
            let mut terms = Vec::with_capacity(c.terms.len());
            for (k, a) in &c.terms {
                self.check(*k, a, &format!("constraint {i}"))?;
                terms.push((*k, embed_half(a)));
            }
            out.constraints.push(Constraint { terms, rhs: c.rhs, label: c.label.clone() });
        }
        Ok(out)
    }

    /// Recovers the complex blocks from a realified solution.
    pub fn complex_blocks(&self, real: &[Matrix<T>]) -> Vec<Matrix<Complex<T>>> {
        self.blocks
            .iter()
            .zip(real)
            .map(|(&n, r)| {
                let half = T::lit(0.5);
                Matrix::from_fn(n, n, |i, j| {
                    let re = (r[(i, j)] + r[(n + i, n + j)]) * half;
                    let im = (r[(n + i, j)] - r[(i, n + j)]) * half;
                    Complex::new(re, im)
                })
            })
            .collect()
    }

    /// `Σ_k Tr[C_k X_k]` for complex blocks.
    pub fn objective_value(&self, x: &[Matrix<Complex<T>>]) -> T {
        self.objective.iter().zip(x).map(|(c, xk)| c.trace_product(xk).re).fold(T::zero(), |a, b| a + b)
    }
}

fn embed_half<T: RealScalar>(a: &Matrix<Complex<T>>) -> Matrix<T>
where
    Complex<T>: Scalar<Real = T>,
{
    let n = a.rows();
    let half = T::lit(0.5);
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            let (re, im) = (z.re * half, z.im * half);
            m[(i, j)] = re;
            m[(n + i, n + j)] = re;
            m[(i, n + j)] = -im;
            m[(n + i, j)] = im;
        }
    }
    m
}
