use crate::error::{arg, Result};
use crate::linalg::{pivoted_qr, Matrix};
use crate::scalar::RealScalar;
use num_traits::Float;

/// One equality `Σ_k ⟨A_k, X_k⟩ = rhs`; blocks that do not appear have zero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T: RealScalar> {
    pub terms: Vec<(usize, Matrix<T>)>,
    pub rhs: T,
    pub label: String,
}

/// Block-diagonal SDP in standard primal form.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem<T: RealScalar> {
    pub name: String,
    pub blocks: Vec<usize>,
    /// Cost matrix per block.
    pub objective: Vec<Matrix<T>>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: RealScalar> SdpProblem<T> {
    /// Empty problem with zero objective.
    pub fn new(name: impl Into<String>, blocks: Vec<usize>) -> Self {
        let objective = blocks.iter().map(|&n| Matrix::zeros(n, n)).collect();
        Self { name: name.into(), blocks, objective, constraints: Vec::new() }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Sum of the block dimensions.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Checks shapes, symmetry and finiteness of all data.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.blocks.len() {
            return arg("one objective matrix per block required");
        }
        let check = |k: usize, m: &Matrix<T>, what: &str| -> Result<()> {
            let n = *self.blocks.get(k).ok_or_else(|| crate::Error::Argument(format!("{what}: block {k} does not exist")))?;
            if m.rows() != n || m.cols() != n {
                return arg(format!("{what}: block {k} needs a {n}x{n} matrix, got {}x{}", m.rows(), m.cols()));
            }
            if !m.is_finite() {
                return arg(format!("{what}: non-finite coefficient in block {k}"));
            }
            let scale = T::one().max(m.max_abs());
            if m.hermiticity_defect() > T::lit(1e-12) * scale {
                return arg(format!("{what}: block {k} is not symmetric"));
            }
            Ok(())
        };
        for (k, c) in self.objective.iter().enumerate() {
            check(k, c, "objective")?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !Float::is_finite(c.rhs) {
                return arg(format!("constraint {i} has a non-finite right-hand side"));
            }
            let mut seen = vec![false; self.blocks.len()];
            for (k, m) in &c.terms {
                check(*k, m, &format!("constraint {i}"))?;
                if std::mem::replace(&mut seen[*k], true) {
                    return arg(format!("constraint {i} names block {k} twice"));
                }
            }
        }
        Ok(())
    }

    /// `⟨A_i, X⟩` for every constraint.
    pub fn apply(&self, x: &[Matrix<T>]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|(k, m)| dot(m, &x[*k])).sum())
            .collect()
    }

    /// `⟨C, X⟩`.
    pub fn objective_value(&self, x: &[Matrix<T>]) -> T {
        self.objective.iter().zip(x).map(|(c, xk)| dot(c, xk)).sum()
    }

    /// Indices of a maximal linearly independent subset of the constraints,
    /// found by column-pivoted QR at relative threshold `tol`.
    pub fn independent_constraints(&self, tol: T) -> Vec<usize> {
        let offsets: Vec<usize> = self
            .blocks
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n * (n + 1) / 2;
                Some(o)
            })
            .collect();
        let rows: usize = self.blocks.iter().map(|&n| n * (n + 1) / 2).sum();
        let m = self.constraints.len();
        if m == 0 {
            return vec![];
        }
        let sqrt2 = T::lit(std::f64::consts::SQRT_2);
        let mut a = Matrix::<T>::zeros(rows, m);
        for (i, c) in self.constraints.iter().enumerate() {
            for (k, mat) in &c.terms {
                let n = self.blocks[*k];
                let mut r = offsets[*k];
                for p in 0..n {
                    for q in p..n {
                        a[(r, i)] = if p == q { mat[(p, q)] } else { mat[(p, q)] * sqrt2 };
                        r += 1;
                    }
                }
            }
        }
        pivoted_qr(&a).independent_columns(tol)
    }

    /// Copy restricted to the given constraints.
    pub fn with_constraints(&self, keep: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            blocks: self.blocks.clone(),
            objective: self.objective.clone(),
            constraints: keep.iter().map(|&i| self.constraints[i].clone()).collect(),
        }
    }
}

/// `Σ_ij A_ij B_ij`.
pub(crate) fn dot<T: RealScalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    a.as_slice().iter().zip(b.as_slice()).fold(T::zero(), |s, (&x, &y)| s + x * y)
}
