//! Operators on multipartite systems.
//!
//! Basis vectors `|j₁…jₙ⟩` are flattened row-major: the index is the
//! mixed-radix number with the subsystem dimensions as radices, the first
//! subsystem being the most significant digit.

use crate::error::{arg, Error, Result};
use crate::linalg::{hermitian_eigenvalues, Matrix};
use crate::scalar::{RealScalar, Scalar};
use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Default cap on the total dimension of any operator built here.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "QCERT_DIM_CAP";

static DIM_CAP: AtomicUsize = AtomicUsize::new(0);

/// Current total-dimension cap. Reads [`DIM_CAP_ENV`] on first use.
pub fn dim_cap() -> usize {
    let cap = DIM_CAP.load(Ordering::Relaxed);
    if cap != 0 {
        return cap;
    }
    let from_env = std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_DIM_CAP);
    DIM_CAP.store(from_env, Ordering::Relaxed);
    from_env
}

/// Overrides the dimension cap for the rest of the process.
pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_cap(requested: usize) -> Result<()> {
    let cap = dim_cap();
    if requested > cap {
        return Err(Error::Capacity { requested, cap });
    }
    Ok(())
}

/// A tolerance no tighter than a small multiple of machine epsilon.
pub fn tolerance<T: RealScalar>(x: f64) -> T {
    T::lit(x).max(T::epsilon() * T::lit(64.0))
}

/// Ordered subsystem dimensions with optional names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemShape {
    dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return arg(format!("subsystem dimension {d} is below 2"));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) => check_cap(t)?,
            None => return Err(Error::Capacity { requested: usize::MAX, cap: dim_cap() }),
        }
        Ok(Self { dims, labels: None })
    }

    /// `n` copies of a `d`-dimensional system.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    /// The trivial shape of a scalar.
    pub fn scalar() -> Self {
        Self { dims: vec![], labels: None }
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.dims.len() {
            return arg(format!("{} labels for {} subsystems", labels.len(), self.dims.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return arg(format!("duplicate subsystem label {l:?}"));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Index of a named subsystem.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .as_ref()
            .and_then(|ls| ls.iter().position(|l| l == label))
            .ok_or_else(|| Error::Argument(format!("no subsystem labelled {label:?}")))
    }

    /// Concatenation; labels survive only if both sides carry them and stay unique.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let shape = Self::new(dims)?;
        match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => {
                let joined: Vec<String> = a.iter().chain(b).cloned().collect();
                Ok(shape.clone().with_labels(joined).unwrap_or(shape))
            }
            _ => Ok(shape),
        }
    }

    fn select(&self, idx: &[usize]) -> Self {
        Self {
            dims: idx.iter().map(|&i| self.dims[i]).collect(),
            labels: self.labels.as_ref().map(|ls| idx.iter().map(|&i| ls[i].clone()).collect()),
        }
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Mixed-radix digits of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (o, &d) in out.iter_mut().zip(&self.dims).rev() {
            *o = index % d;
            index /= d;
        }
        out
    }

    /// Flat index of mixed-radix digits.
    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&j, &d)| acc * d + j)
    }

    fn check_subsystem(&self, i: usize) -> Result<()> {
        if i >= self.dims.len() {
            return arg(format!("subsystem index {i} out of range for {} subsystems", self.dims.len()));
        }
        Ok(())
    }
}

/// A square matrix tagged with the subsystem structure it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator<E: Scalar> {
    matrix: Matrix<E>,
    shape: SystemShape,
    hermitian: bool,
}

/// Outcome of a positivity test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport<T> {
    pub is_psd: bool,
    pub min_eigenvalue: T,
}

impl<E: Scalar> LabeledOperator<E> {
    pub fn new(matrix: Matrix<E>, shape: SystemShape) -> Result<Self> {
        if !matrix.is_square() {
            return arg(format!("operator must be square, got {}x{}", matrix.rows(), matrix.cols()));
        }
        if matrix.rows() != shape.total_dim() {
            return arg(format!(
                "matrix dimension {} does not match shape {:?}",
                matrix.rows(),
                shape.dims()
            ));
        }
        if !matrix.is_finite() {
            return arg("operator contains non-finite entries");
        }
        Ok(Self { matrix, shape, hermitian: false })
    }

    /// Builds an operator flagged Hermitian; the flag is checked by [`Self::verify_hermitian`].
    pub fn hermitian(matrix: Matrix<E>, shape: SystemShape) -> Result<Self> {
        let mut op = Self::new(matrix, shape)?;
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(shape: SystemShape) -> Self {
        let n = shape.total_dim();
        Self { matrix: Matrix::identity(n), shape, hermitian: true }
    }

    pub fn matrix(&self) -> &Matrix<E> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<E> {
        self.matrix
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn relabel(mut self, shape: SystemShape) -> Result<Self> {
        if shape.total_dim() != self.dim() {
            return arg("relabelled shape changes the dimension");
        }
        self.shape = shape;
        Ok(self)
    }

    /// Checks the Hermitian flag against the matrix (tolerance 1e-10).
    pub fn verify_hermitian(&self) -> Result<()> {
        let defect = self.matrix.hermiticity_defect();
        if defect > tolerance::<E::Real>(1e-10) * (E::Real::one() + self.matrix.max_abs()) {
            return Err(Error::NumericalConsistency(format!("operator is not Hermitian (defect {defect:e})")));
        }
        Ok(())
    }

    pub fn trace(&self) -> E {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), shape: self.shape.clone(), hermitian: self.hermitian }
    }

    /// Product on the same shape.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.same_shape(rhs)?;
        Ok(Self { matrix: self.matrix.matmul(&rhs.matrix), shape: self.shape.clone(), hermitian: false })
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Matrix<E>) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return arg("conjugating unitary has the wrong dimension");
        }
        let m = u.matmul(&self.matrix).matmul(&u.adjoint());
        Ok(Self { matrix: m, shape: self.shape.clone(), hermitian: self.hermitian })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.same_shape(rhs)?;
        Ok(Self {
            matrix: &self.matrix + &rhs.matrix,
            shape: self.shape.clone(),
            hermitian: self.hermitian && rhs.hermitian,
        })
    }

    pub fn scale_real(&self, s: E::Real) -> Self {
        Self { matrix: self.matrix.scale_real(s), shape: self.shape.clone(), hermitian: self.hermitian }
    }

    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose(), shape: self.shape.clone(), hermitian: self.hermitian }
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<E::Real> {
        self.same_shape_dims(rhs)?;
        Ok(self.matrix.max_abs_diff(&rhs.matrix))
    }

    fn same_shape(&self, rhs: &Self) -> Result<()> {
        self.same_shape_dims(rhs)
    }

    fn same_shape_dims(&self, rhs: &Self) -> Result<()> {
        if self.shape.dims() != rhs.shape.dims() {
            return arg(format!("shape mismatch: {:?} vs {:?}", self.shape.dims(), rhs.shape.dims()));
        }
        Ok(())
    }
}

/// `a ⊗ b`, capped by [`dim_cap`].
pub fn kron<E: Scalar>(a: &LabeledOperator<E>, b: &LabeledOperator<E>) -> Result<LabeledOperator<E>> {
    let requested = a.dim().checked_mul(b.dim()).unwrap_or(usize::MAX);
    check_cap(requested)?;
    let shape = a.shape.concat(&b.shape)?;
    Ok(LabeledOperator { matrix: a.matrix.kron(&b.matrix), shape, hermitian: a.hermitian && b.hermitian })
}

/// Left-folded tensor product of several operators.
pub fn kron_all<E: Scalar>(ops: &[&LabeledOperator<E>]) -> Result<LabeledOperator<E>> {
    let (first, rest) = ops.split_first().ok_or_else(|| Error::Argument("empty tensor product".into()))?;
    rest.iter().try_fold((*first).clone(), |acc, op| kron(&acc, op))
}

/// Traces out every subsystem not in `keep`; kept subsystems stay in their original order.
pub fn partial_trace<E: Scalar>(m: &LabeledOperator<E>, keep: &[usize]) -> Result<LabeledOperator<E>> {
    let shape = &m.shape;
    for &k in keep {
        shape.check_subsystem(k)?;
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return arg("repeated subsystem in keep set");
    }
    if kept.len() == shape.len() {
        return Ok(m.clone());
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !kept.contains(i)).collect();
    let kshape = shape.select(&kept);
    let tshape = shape.select(&traced);
    let strides = shape.strides();
    let offsets = |sub: &SystemShape, idx: &[usize]| -> Vec<usize> {
        (0..sub.total_dim())
            .map(|f| sub.digits(f).iter().zip(idx).map(|(&j, &s)| j * strides[s]).sum())
            .collect()
    };
    let kofs = offsets(&kshape, &kept);
    let tofs = offsets(&tshape, &traced);
    let kd = kofs.len();
    let mut out = Matrix::zeros(kd, kd);
    for (i, &oi) in kofs.iter().enumerate() {
        for (j, &oj) in kofs.iter().enumerate() {
            let mut acc = E::zero();
            for &t in &tofs {
                acc += m.matrix[(oi + t, oj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(LabeledOperator { matrix: out, shape: kshape, hermitian: m.hermitian })
}

/// Transposes the indices of one subsystem.
pub fn partial_transpose<E: Scalar>(m: &LabeledOperator<E>, subsystem: usize) -> Result<LabeledOperator<E>> {
    m.shape.check_subsystem(subsystem)?;
    let d = m.shape.dims()[subsystem];
    let stride = m.shape.strides()[subsystem];
    let n = m.dim();
    let mut out = m.matrix.clone();
    for i in 0..n {
        let di = (i / stride) % d;
        let ibase = i - di * stride;
        for j in 0..n {
            let dj = (j / stride) % d;
            let jbase = j - dj * stride;
            out[(ibase + dj * stride, jbase + di * stride)] = m.matrix[(i, j)];
        }
    }
    Ok(LabeledOperator { matrix: out, shape: m.shape.clone(), hermitian: m.hermitian })
}

/// Reorders subsystems: subsystem `i` of the result is subsystem `perm[i]` of `m`.
pub fn permute_subsystems<E: Scalar>(m: &LabeledOperator<E>, perm: &[usize]) -> Result<LabeledOperator<E>> {
    let p = permutation_matrix::<E>(&m.shape, perm)?;
    let shape = m.shape.select(perm);
    let matrix = p.matmul(&m.matrix).matmul(&p.transpose());
    Ok(LabeledOperator { matrix, shape, hermitian: m.hermitian })
}

/// Permutation matrix sending `|j₁…jₙ⟩` to `|j_{perm[0]}…j_{perm[n-1]}⟩`.
pub fn permutation_matrix<E: Scalar>(shape: &SystemShape, perm: &[usize]) -> Result<Matrix<E>> {
    let n = shape.len();
    let mut seen = vec![false; n];
    if perm.len() != n {
        return arg("permutation length differs from subsystem count");
    }
    for &p in perm {
        shape.check_subsystem(p)?;
        if std::mem::replace(&mut seen[p], true) {
            return arg("permutation repeats a subsystem");
        }
    }
    let target = shape.select(perm);
    let dim = shape.total_dim();
    let mut out = Matrix::zeros(dim, dim);
    for src in 0..dim {
        let dg = shape.digits(src);
        let new_digits: Vec<usize> = perm.iter().map(|&p| dg[p]).collect();
        out[(target.flat_index(&new_digits), src)] = E::one();
    }
    Ok(out)
}

/// Embeds an operator acting on `targets` (in that order) into the full shape.
pub fn embed<E: Scalar>(op: &Matrix<E>, targets: &[usize], shape: &SystemShape) -> Result<Matrix<E>> {
    for &t in targets {
        shape.check_subsystem(t)?;
    }
    let sub = shape.select(targets);
    if op.rows() != sub.total_dim() || op.cols() != sub.total_dim() {
        return arg("local operator dimension does not match its target subsystems");
    }
    let mut distinct = targets.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != targets.len() {
        return arg("repeated target subsystem");
    }
    let strides = shape.strides();
    let rest: Vec<usize> = (0..shape.len()).filter(|i| !targets.contains(i)).collect();
    let rshape = shape.select(&rest);
    let sub_ofs: Vec<usize> = (0..sub.total_dim())
        .map(|f| sub.digits(f).iter().zip(targets).map(|(&j, &s)| j * strides[s]).sum())
        .collect();
    let dim = shape.total_dim();
    let mut out = Matrix::zeros(dim, dim);
    for r in 0..rshape.total_dim() {
        let base: usize = rshape.digits(r).iter().zip(&rest).map(|(&j, &s)| j * strides[s]).sum();
        for (a, &oa) in sub_ofs.iter().enumerate() {
            for (b, &ob) in sub_ofs.iter().enumerate() {
                let v = op[(a, b)];
                if v != E::zero() {
                    out[(base + oa, base + ob)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// `⟨ψ|ρ|ψ⟩` for a density matrix and a normalized vector.
pub fn pure_fidelity<E: Scalar>(rho: &LabeledOperator<E>, psi: &[E]) -> Result<E::Real> {
    if psi.len() != rho.dim() {
        return arg(format!("state of length {} against operator of dimension {}", psi.len(), rho.dim()));
    }
    let norm = crate::linalg::vec_norm(psi);
    if (norm - E::Real::one()).abs() > tolerance::<E::Real>(1e-10) {
        return arg(format!("reference state is not normalized (norm {norm})"));
    }
    let tr = rho.trace();
    if (tr.re() - E::Real::one()).abs() > tolerance::<E::Real>(1e-8) || tr.im().abs() > tolerance::<E::Real>(1e-8) {
        return arg(format!("density matrix trace {:?} is not one", tr));
    }
    if rho.matrix.hermiticity_defect() > tolerance::<E::Real>(1e-10) {
        return arg("density matrix is not Hermitian");
    }
    let v = crate::linalg::vec_inner(psi, &rho.matrix.matvec(psi));
    if v.im().abs() > tolerance::<E::Real>(1e-10) {
        return Err(Error::NumericalConsistency(format!("fidelity has imaginary part {:e}", v.im())));
    }
    Ok(v.re())
}

/// Smallest eigenvalue and whether it clears `-tol`.
pub fn psd_check<E: Scalar>(m: &LabeledOperator<E>, tol: E::Real) -> Result<PsdReport<E::Real>> {
    psd_check_matrix(&m.matrix, tol)
}

pub fn psd_check_matrix<E: Scalar>(m: &Matrix<E>, tol: E::Real) -> Result<PsdReport<E::Real>> {
    let scale = E::Real::one().max(m.max_abs());
    if m.hermiticity_defect() > tolerance::<E::Real>(1e-10) * scale {
        return arg("positivity test needs a Hermitian operator");
    }
    let ev = hermitian_eigenvalues(m)?;
    let min = ev.first().copied().unwrap_or_else(E::Real::zero);
    Ok(PsdReport { is_psd: min >= -tol, min_eigenvalue: min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn op(m: Matrix<C>, dims: Vec<usize>) -> LabeledOperator<C> {
        LabeledOperator::new(m, SystemShape::new(dims).unwrap()).unwrap()
    }

    #[test]
    fn partial_trace_of_product() {
        let a = Matrix::from_fn(2, 2, |i, j| C::new((i + 2 * j) as f64, i as f64 - j as f64));
        let b = Matrix::from_fn(3, 3, |i, j| C::new(1.0 + (i * j) as f64, 0.0));
        let ab = kron(&op(a.clone(), vec![2]), &op(b.clone(), vec![3])).unwrap();
        let ra = partial_trace(&ab, &[0]).unwrap();
        assert!(ra.matrix().max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert!(rb.matrix().max_abs_diff(&b.scale(a.trace())) < 1e-12);
        let scalar = partial_trace(&ab, &[]).unwrap();
        assert_eq!(scalar.dim(), 1);
        assert!((scalar.matrix()[(0, 0)] - ab.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product() {
        let a = Matrix::from_fn(2, 2, |i, j| C::new(i as f64, j as f64));
        let b = Matrix::from_fn(3, 3, |i, j| C::new((3 * i + j) as f64, 1.0));
        let ab = kron(&op(a.clone(), vec![2]), &op(b.clone(), vec![3])).unwrap();
        let pt = partial_transpose(&ab, 1).unwrap();
        assert!(pt.matrix().max_abs_diff(&a.kron(&b.transpose())) < 1e-15);
        let pt0 = partial_transpose(&ab, 0).unwrap();
        assert!(pt0.matrix().max_abs_diff(&a.transpose().kron(&b)) < 1e-15);
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = Matrix::from_fn(2, 2, |i, j| C::new((i + j) as f64, 0.5));
        let b = Matrix::from_fn(3, 3, |i, j| C::new(i as f64 * 0.1, j as f64));
        let ab = kron(&op(a.clone(), vec![2]), &op(b.clone(), vec![3])).unwrap();
        let ba = permute_subsystems(&ab, &[1, 0]).unwrap();
        assert_eq!(ba.dims(), &[3, 2]);
        assert!(ba.matrix().max_abs_diff(&b.kron(&a)) < 1e-15);
    }

    #[test]
    fn embed_matches_kron_with_identity() {
        let x = Matrix::from_fn(2, 2, |i, j| C::new((i ^ j) as f64, 0.0));
        let shape = SystemShape::new(vec![2, 3, 2]).unwrap();
        let e = embed(&x, &[2], &shape).unwrap();
        let expect = Matrix::identity(6).kron(&x);
        assert!(e.max_abs_diff(&expect) < 1e-15);
        let e0 = embed(&x, &[0], &shape).unwrap();
        assert!(e0.max_abs_diff(&x.kron(&Matrix::identity(6))) < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let big = SystemShape::new(vec![2; 20]);
        assert!(matches!(big, Err(Error::Capacity { .. })));
    }

    #[test]
    fn labels_must_be_unique() {
        let s = SystemShape::new(vec![2, 2]).unwrap();
        assert!(s.clone().with_labels(["A", "A"]).is_err());
        let s = s.with_labels(["A'", "A"]).unwrap();
        assert_eq!(s.index_of("A").unwrap(), 1);
    }
}
