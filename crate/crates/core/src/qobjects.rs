//! Concrete quantum objects: states, measurements, input ensembles and the
//! qudit Weyl/Bell constructions.

use crate::error::{arg, Error, Result};
use crate::linalg::{hermitian_eigen, numerical_rank, psd_sqrt, svd, vec_norm, Matrix};
use crate::tensor::{kron, permute_subsystems, psd_check, pure_fidelity, SystemShape};
use crate::{c64, CMatrix, Operator};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Tolerance on state normalization.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on POVM positivity, completeness and density-matrix validity.
pub const VALIDITY_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

#[inline]
pub(crate) fn r(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// A normalized vector on a multipartite system.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<c64>,
    shape: SystemShape,
}

impl PureState {
    pub fn new(amplitudes: Vec<c64>, shape: SystemShape) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return arg(format!("{} amplitudes for shape {:?}", amplitudes.len(), shape.dims()));
        }
        let n = vec_norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return arg(format!("state norm {n} differs from one"));
        }
        Ok(Self { amplitudes, shape })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(amplitudes: Vec<c64>, shape: SystemShape) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return arg("cannot normalize a zero or non-finite vector");
        }
        Self::new(amplitudes.into_iter().map(|z| z / n).collect(), shape)
    }

    /// Computational basis vector `|j⟩` of a single `d`-level system.
    pub fn basis(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return arg(format!("basis index {j} out of range for dimension {d}"));
        }
        let mut v = vec![c64::new(0.0, 0.0); d];
        v[j] = r(1.0);
        Self::new(v, SystemShape::new(vec![d])?)
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn projector(&self) -> Operator {
        let m = Matrix::outer(&self.amplitudes, &self.amplitudes);
        Operator::hermitian(m, self.shape.clone()).expect("projector matches its shape")
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.concat(&other.shape)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for &a in &self.amplitudes {
            for &b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Self::new(amps, shape)
    }

    /// `U|ψ⟩`.
    pub fn apply(&self, u: &CMatrix) -> Result<Self> {
        if u.cols() != self.dim() || u.rows() != self.dim() {
            return arg("unitary dimension does not match state");
        }
        Self::new(u.matvec(&self.amplitudes), self.shape.clone())
    }

    pub fn inner(&self, other: &Self) -> c64 {
        crate::linalg::vec_inner(&self.amplitudes, &other.amplitudes)
    }
}

/// A Hermitian, positive, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        let m = op.matrix();
        if m.hermiticity_defect() > VALIDITY_TOL {
            return Err(Error::NumericalConsistency("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > VALIDITY_TOL || tr.im.abs() > VALIDITY_TOL {
            return arg(format!("density matrix trace {tr} is not one"));
        }
        let rep = psd_check(&op, VALIDITY_TOL)?;
        if !rep.is_psd {
            return arg(format!("density matrix has eigenvalue {:e}", rep.min_eigenvalue));
        }
        let shape = op.shape().clone();
        Ok(Self { op: Operator::hermitian(m.clone(), shape)? })
    }

    pub fn from_matrix(m: CMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::new(Operator::new(m, SystemShape::new(dims)?)?)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { op: psi.projector() }
    }

    /// `I/D` on the given shape.
    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let n = shape.total_dim() as f64;
        Self { op: Operator::identity(shape).scale_real(1.0 / n) }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &PureState) -> Result<f64> {
        pure_fidelity(&self.op, psi.amplitudes())
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self { op: kron(&self.op, &other.op)? })
    }

    /// Convex mixture `p·self + (1−p)·other`.
    pub fn mix(&self, p: f64, other: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return arg(format!("mixing weight {p} outside [0,1]"));
        }
        let op = self.op.scale_real(p).add(&other.op.scale_real(1.0 - p))?;
        Self::new(op)
    }
}

/// Finite collection of effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<Operator>,
    labels: Vec<String>,
    shape: SystemShape,
}

impl Povm {
    pub fn new(effects: Vec<Operator>, labels: Vec<String>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::Argument("POVM without effects".into()))?;
        let shape = first.shape().clone();
        if labels.len() != effects.len() {
            return arg(format!("{} labels for {} effects", labels.len(), effects.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return arg(format!("duplicate outcome label {l:?}"));
            }
        }
        let n = shape.total_dim();
        let mut sum = CMatrix::zeros(n, n);
        for (k, e) in effects.iter().enumerate() {
            if e.dims() != shape.dims() {
                return arg(format!("effect {k} acts on {:?}, expected {:?}", e.dims(), shape.dims()));
            }
            let rep = psd_check(e, VALIDITY_TOL)?;
            if !rep.is_psd {
                return arg(format!("effect {k} has eigenvalue {:e}", rep.min_eigenvalue));
            }
            sum.axpy(r(1.0), e.matrix());
        }
        let defect = sum.max_abs_diff(&CMatrix::identity(n));
        if defect > VALIDITY_TOL {
            return arg(format!("effects sum to identity only within {defect:e}"));
        }
        let effects = effects
            .into_iter()
            .map(|e| Operator::hermitian(e.matrix().hermitian_part(), e.shape().clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { effects, labels, shape })
    }

    /// Effects labelled `0..n`.
    pub fn from_effects(effects: Vec<Operator>) -> Result<Self> {
        let labels = (0..effects.len()).map(|k| k.to_string()).collect();
        Self::new(effects, labels)
    }

    pub fn from_matrices(mats: Vec<CMatrix>, dims: Vec<usize>) -> Result<Self> {
        let shape = SystemShape::new(dims)?;
        let effects = mats
            .into_iter()
            .map(|m| Operator::new(m, shape.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_effects(effects)
    }

    /// Projective measurement in an orthonormal basis given by the columns of `u`.
    pub fn from_basis(u: &CMatrix, dims: Vec<usize>) -> Result<Self> {
        let mats = (0..u.cols()).map(|k| {
            let v = u.col(k);
            Matrix::outer(&v, &v)
        });
        Self::from_matrices(mats.collect(), dims)
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, k: usize) -> &CMatrix {
        self.effects[k].matrix()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn dim(&self) -> usize {
        self.shape.total_dim()
    }

    /// True when every effect is idempotent within `tol`.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| e.matrix().matmul(e.matrix()).max_abs_diff(e.matrix()) <= tol)
    }

    /// Reorders the subsystems each effect acts on.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let effects = self.effects.iter().map(|e| permute_subsystems(e, perm)).collect::<Result<Vec<_>>>()?;
        Self::new(effects, self.labels.clone())
    }

    /// Exchanges the two factors of a bipartite measurement.
    pub fn exchange_factors(&self) -> Result<Self> {
        if self.shape.len() != 2 {
            return arg("exchanging factors needs a bipartite measurement");
        }
        self.permute(&[1, 0])
    }

    /// Born-rule distribution on a state of the same shape.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dims() != self.dims() {
            return arg("state and measurement shapes differ");
        }
        Ok(self.effects.iter().map(|e| e.matrix().trace_product(rho.matrix()).re).collect())
    }

    /// Mixes every effect with white noise: `η M_k + (1−η) I/n`.
    pub fn with_visibility(&self, eta: f64) -> Result<Self> {
        check_unit_interval("visibility", eta)?;
        let n = self.len() as f64;
        let id = CMatrix::identity(self.dim());
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let m = &e.matrix().scale_real(eta) + &id.scale_real((1.0 - eta) / n);
                Operator::new(m, self.shape.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects, self.labels.clone())
    }
}

/// Pure input states on one `d`-level system.
#[derive(Clone, Debug, PartialEq)]
pub struct InputEnsemble {
    states: Vec<PureState>,
    labels: Vec<String>,
}

impl InputEnsemble {
    pub fn new(states: Vec<PureState>, labels: Vec<String>) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::Precondition("empty input ensemble".into()))?;
        let d = first.dim();
        if states.iter().any(|s| s.shape().len() != 1 || s.dim() != d) {
            return arg("ensemble states must all live on one system of equal dimension");
        }
        if labels.len() != states.len() {
            return arg(format!("{} labels for {} states", labels.len(), states.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return arg(format!("duplicate input label {l:?}"));
            }
        }
        Ok(Self { states, labels })
    }

    /// Normalizes raw vectors and labels them `0..n`.
    pub fn from_vectors(vectors: Vec<Vec<c64>>) -> Result<Self> {
        let labels = (0..vectors.len()).map(|k| k.to_string()).collect();
        Self::from_labelled_vectors(vectors, labels)
    }

    pub fn from_labelled_vectors(vectors: Vec<Vec<c64>>, labels: Vec<String>) -> Result<Self> {
        let states = vectors
            .into_iter()
            .map(|v| {
                let d = v.len();
                PureState::normalized(v, SystemShape::new(vec![d])?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, labels)
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Appends the states of `other`, relabelling clashes with a suffix.
    pub fn extended(&self, other: &Self) -> Result<Self> {
        let mut states = self.states.clone();
        let mut labels = self.labels.clone();
        for (s, l) in other.states.iter().zip(&other.labels) {
            let mut label = l.clone();
            while labels.contains(&label) {
                label.push('\'');
            }
            states.push(s.clone());
            labels.push(label);
        }
        Self::new(states, labels)
    }
}

/// Generalized Pauli operators of one qudit.
#[derive(Clone, Debug)]
pub struct Weyl {
    pub x: CMatrix,
    pub z: CMatrix,
    pub omega: c64,
}

/// `Z = Σ ωʲ|j⟩⟨j|`, `X = Σ |j+1⟩⟨j|`, `ω = e^{2πi/d}`.
pub fn weyl_operators(d: usize) -> Result<Weyl> {
    if d < 2 {
        return arg(format!("qudit dimension {d} is below 2"));
    }
    let omega = c64::from_polar(1.0, 2.0 * PI / d as f64);
    let z = Matrix::diag(&(0..d).map(|j| root_of_unity(d, j)).collect::<Vec<_>>());
    let mut x = CMatrix::zeros(d, d);
    for j in 0..d {
        x[((j + 1) % d, j)] = r(1.0);
    }
    Ok(Weyl { x, z, omega })
}

/// `ω^k` with exact values at the quarter turns.
fn root_of_unity(d: usize, k: usize) -> c64 {
    let k = k % d;
    match (4 * k) % d {
        0 => match 4 * k / d {
            0 => r(1.0),
            1 => c(0.0, 1.0),
            2 => r(-1.0),
            _ => c(0.0, -1.0),
        },
        _ => c64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64),
    }
}

fn matrix_power(m: &CMatrix, k: usize) -> CMatrix {
    (0..k).fold(CMatrix::identity(m.rows()), |acc, _| acc.matmul(m))
}

/// `U_m = X^k Z^l` with `(k, l) = (m div d, m mod d)`.
pub fn correcting_unitary(m: usize, d: usize) -> Result<CMatrix> {
    let w = weyl_operators(d)?;
    if m >= d * d {
        return arg(format!("outcome {m} out of range for {} Bell outcomes", d * d));
    }
    Ok(matrix_power(&w.x, m / d).matmul(&matrix_power(&w.z, m % d)))
}

/// `(1/√d) Σ_j |jj⟩`.
pub fn maximally_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return arg(format!("qudit dimension {d} is below 2"));
    }
    let mut v = vec![r(0.0); d * d];
    let amp = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        v[j * d + j] = r(amp);
    }
    PureState::new(v, SystemShape::uniform(d, 2)?)
}

/// `(1/√d) Σ_j |j…j⟩` on `n` qudits.
pub fn ghz(d: usize, n: usize) -> Result<PureState> {
    if n < 2 {
        return arg("GHZ state needs at least two parties");
    }
    let shape = SystemShape::uniform(d, n)?;
    let mut v = vec![r(0.0); shape.total_dim()];
    let amp = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        v[shape.flat_index(&vec![j; n])] = r(amp);
    }
    PureState::new(v, shape)
}

/// Bell basis `|ψ_m⟩ = (X^k Z^l ⊗ 1)|φ⁺⟩`, `m = k·d + l`.
pub fn bell_basis(d: usize) -> Result<Vec<PureState>> {
    let phi = maximally_entangled(d)?;
    let id = CMatrix::identity(d);
    (0..d * d).map(|m| phi.apply(&correcting_unitary(m, d)?.kron(&id))).collect()
}

/// Ideal Bell state measurement; outcome `m` projects onto `|ψ_m⟩`.
pub fn bsm(d: usize) -> Result<Povm> {
    let effects = bell_basis(d)?.iter().map(PureState::projector).collect();
    Povm::from_effects(effects)
}

/// `η B_m + (1−η) I/d²`.
pub fn noisy_bsm(d: usize, eta: f64) -> Result<Povm> {
    bsm(d)?.with_visibility(eta)
}

fn check_unit_interval(what: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return arg(format!("{what} {v} outside [0,1]"));
    }
    Ok(())
}

/// `p·φ⁺ + (1−p)·I/d²`.
pub fn isotropic_state(d: usize, p: f64) -> Result<DensityMatrix> {
    check_unit_interval("isotropic weight", p)?;
    let phi = DensityMatrix::from_pure(&maximally_entangled(d)?);
    phi.mix(p, &DensityMatrix::maximally_mixed(SystemShape::uniform(d, 2)?))
}

/// Rank of the span of an ensemble's projectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompletenessReport {
    pub complete: bool,
    pub rank: usize,
    /// `d²`, the rank a complete ensemble reaches.
    pub required: usize,
}

impl CompletenessReport {
    pub fn deficit(&self) -> usize {
        self.required - self.rank
    }
}

pub fn is_tomographically_complete(e: &InputEnsemble) -> Result<CompletenessReport> {
    let d = e.dim();
    let rows = e.len();
    let mut design = CMatrix::zeros(rows, d * d);
    for (x, s) in e.states().iter().enumerate() {
        let p = s.projector();
        for (k, &v) in p.matrix().as_slice().iter().enumerate() {
            design[(x, k)] = v;
        }
    }
    let rank = numerical_rank(&design, 1e-10)?;
    Ok(CompletenessReport { complete: rank == d * d, rank, required: d * d })
}

/// `{|j⟩} ∪ {(|j⟩+|k⟩)/√2} ∪ {(|j⟩+i|k⟩)/√2}`, `j < k`.
pub fn standard_complete_set(d: usize) -> Result<InputEnsemble> {
    if d < 2 {
        return arg(format!("qudit dimension {d} is below 2"));
    }
    let mut vecs = Vec::with_capacity(d * d);
    let mut labels = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut v = vec![r(0.0); d];
        v[j] = r(1.0);
        vecs.push(v);
        labels.push(format!("{j}"));
    }
    for (phase, tag) in [(r(1.0), "+"), (c(0.0, 1.0), "+i")] {
        for j in 0..d {
            for k in j + 1..d {
                let mut v = vec![r(0.0); d];
                v[j] = r(FRAC_1_SQRT_2);
                v[k] = phase * FRAC_1_SQRT_2;
                vecs.push(v);
                labels.push(format!("{j}{tag}{k}"));
            }
        }
    }
    InputEnsemble::from_labelled_vectors(vecs, labels)
}

/// The six qubit Pauli eigenstates: |0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩.
pub fn pauli_six() -> InputEnsemble {
    let s = FRAC_1_SQRT_2;
    InputEnsemble::from_labelled_vectors(
        vec![
            vec![r(1.0), r(0.0)],
            vec![r(0.0), r(1.0)],
            vec![r(s), r(s)],
            vec![r(s), r(-s)],
            vec![r(s), c(0.0, s)],
            vec![r(s), c(0.0, -s)],
        ],
        ["0", "1", "+", "-", "+i", "-i"].map(String::from).to_vec(),
    )
    .expect("static ensemble")
}

/// Inputs of the quantum-classical game: |0⟩, |1⟩, |+⟩, |−⟩.
pub fn qc_inputs() -> InputEnsemble {
    let s = FRAC_1_SQRT_2;
    InputEnsemble::from_labelled_vectors(
        vec![vec![r(1.0), r(0.0)], vec![r(0.0), r(1.0)], vec![r(s), r(s)], vec![r(s), r(-s)]],
        ["psi0", "psi0bar", "psi1", "psi1bar"].map(String::from).to_vec(),
    )
    .expect("static ensemble")
}

/// Inputs of the CHSH game with quantum inputs: |0⟩ and |+⟩.
pub fn chsh_inputs() -> InputEnsemble {
    let s = FRAC_1_SQRT_2;
    InputEnsemble::from_labelled_vectors(
        vec![vec![r(1.0), r(0.0)], vec![r(s), r(s)]],
        ["psi0", "psi1"].map(String::from).to_vec(),
    )
    .expect("static ensemble")
}

/// Four-state qutrit ensemble: |0⟩, |1⟩, (|0⟩+|1⟩+|2⟩)/√3, (|0⟩+w|1⟩+w*|2⟩)/√3.
pub fn qutrit_case1() -> InputEnsemble {
    let w = root_of_unity(3, 1);
    InputEnsemble::from_vectors(vec![
        vec![r(1.0), r(0.0), r(0.0)],
        vec![r(0.0), r(1.0), r(0.0)],
        vec![r(1.0), r(1.0), r(1.0)],
        vec![r(1.0), w, w.conj()],
    ])
    .expect("static ensemble")
}

/// The four-state set plus (|0⟩+|1⟩+w|2⟩)/√3 and (w|0⟩+|1⟩+|2⟩)/√3.
pub fn qutrit_case2() -> InputEnsemble {
    let w = root_of_unity(3, 1);
    let extra = InputEnsemble::from_labelled_vectors(
        vec![vec![r(1.0), r(1.0), w], vec![w, r(1.0), r(1.0)]],
        vec!["4".into(), "5".into()],
    )
    .expect("static ensemble");
    qutrit_case1().extended(&extra).expect("static ensemble")
}

/// Pure state and measurement reproducing the statistics of a mixed state.
#[derive(Clone, Debug)]
pub struct PureEquivalent {
    pub state: PureState,
    pub povm: Povm,
    /// Schmidt coefficients of the returned state, descending.
    pub schmidt: Vec<f64>,
}

/// Replaces a mixed `ρ` on A⊗B and Bob's measurement on B⊗B′ by a pure
/// state on A⊗B and a measurement on B⊗B′ with identical statistics
/// against any Alice-side measurement and any trusted inputs.
///
/// Requires `d_A ≤ d_B`; swap the parties otherwise.
pub fn pure_equivalent(rho: &DensityMatrix, bob: &Povm) -> Result<PureEquivalent> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return arg("pure equivalent needs a bipartite state");
    }
    let (da, db) = (dims[0], dims[1]);
    if da > db {
        return arg(format!("Alice's dimension {da} exceeds Bob's {db}; exchange the parties"));
    }
    if bob.dims().len() != 2 || bob.dims()[0] != db {
        return arg("Bob's measurement must act on B⊗B′ with B matching the state");
    }
    let dbp = bob.dims()[1];

    // Purify: |ρ̃⟩ = Σ √λ_i |e_i⟩_AB |i⟩_P.
    let eig = hermitian_eigen(rho.matrix())?;
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 1e-12).collect();
    let rp = keep.len();
    // Amplitude matrix rows A, columns (B, P).
    let mut psi = CMatrix::zeros(da, db * rp);
    for (p, &i) in keep.iter().enumerate() {
        let w = eig.values[i].sqrt();
        for a in 0..da {
            for b in 0..db {
                psi[(a, b * rp + p)] = eig.vectors[(a * db + b, i)] * w;
            }
        }
    }
    let s = svd(&psi)?;
    let k = s.sigma.iter().filter(|&&x| x > 1e-12).count();
    // |ρ̃⟩ = Σ_k s_k |u_k⟩ ⊗ conj(v_k); W maps conj(v_k) ↦ |k⟩_B.
    let mut w = CMatrix::zeros(db, db * rp);
    for j in 0..k {
        for beta in 0..db * rp {
            w[(j, beta)] = s.v[(beta, j)];
        }
    }
    let mut amps = vec![r(0.0); da * db];
    for j in 0..k {
        for a in 0..da {
            amps[a * db + j] = s.u[(a, j)] * s.sigma[j];
        }
    }
    let state = PureState::normalized(amps, SystemShape::new(vec![da, db])?)?;

    let wb = w.kron(&CMatrix::identity(dbp));
    let leak = (&CMatrix::identity(db) - &w.matmul(&w.adjoint())).kron(&CMatrix::identity(dbp));
    let mut effects = Vec::with_capacity(bob.len());
    for (idx, e) in bob.effects().iter().enumerate() {
        // M_b ⊗ 1_P reordered from B⊗B′⊗P to B⊗P⊗B′ so that W acts on the leading pair.
        let lifted = if rp > 1 {
            let op = Operator::new(e.matrix().kron(&CMatrix::identity(rp)), SystemShape::new(vec![db, dbp, rp])?)?;
            permute_subsystems(&op, &[0, 2, 1])?.into_matrix()
        } else {
            e.matrix().clone()
        };
        let mut m = wb.matmul(&lifted).matmul(&wb.adjoint());
        if idx == 0 {
            m = &m + &leak;
        }
        effects.push(Operator::new(m.hermitian_part(), bob.shape().clone())?);
    }
    let povm = Povm::new(effects, bob.labels().to_vec())?;
    Ok(PureEquivalent { state, povm, schmidt: s.sigma[..k].to_vec() })
}

/// Projective measurement on a larger space and the isometry embedding the original one.
#[derive(Clone, Debug)]
pub struct NaimarkDilation {
    pub povm: Povm,
    /// `V` with `V†V = I` and `M_k = V† P_k V`.
    pub isometry: CMatrix,
}

impl NaimarkDilation {
    pub fn embed(&self, psi: &PureState) -> Result<PureState> {
        if psi.dim() != self.isometry.cols() {
            return arg("state dimension does not match the dilation");
        }
        PureState::new(self.isometry.matvec(psi.amplitudes()), self.povm.shape().clone())
    }
}

/// Dilates a POVM to a projective measurement.
///
/// Projective inputs are returned unchanged; POVMs made of rank-one effects
/// dilate minimally into `C^n`; anything else uses `V = Σ_k √M_k ⊗ |k⟩`.
pub fn naimark_dilate(p: &Povm) -> Result<NaimarkDilation> {
    let d = p.dim();
    let n = p.len();
    if p.is_projective(VALIDITY_TOL) {
        return Ok(NaimarkDilation { povm: p.clone(), isometry: CMatrix::identity(d) });
    }
    let rank_one: Option<Vec<Vec<c64>>> = p
        .effects()
        .iter()
        .map(|e| {
            let eig = hermitian_eigen(e.matrix()).ok()?;
            let positive = eig.values.iter().filter(|&&v| v > VALIDITY_TOL).count();
            (positive == 1).then(|| {
                let top = eig.values[d - 1].sqrt();
                eig.vectors.col(d - 1).into_iter().map(|z| z * top).collect()
            })
        })
        .collect();
    if let (Some(vs), true) = (rank_one, n >= 2) {
        let mut v = CMatrix::zeros(n, d);
        for (k, w) in vs.iter().enumerate() {
            for j in 0..d {
                v[(k, j)] = w[j].conj();
            }
        }
        let basis = CMatrix::identity(n);
        let povm = Povm::from_basis(&basis, vec![n])?;
        let povm = Povm::new(povm.effects().to_vec(), p.labels().to_vec())?;
        return Ok(NaimarkDilation { povm, isometry: v });
    }
    let mut v = CMatrix::zeros(d * n, d);
    for (k, e) in p.effects().iter().enumerate() {
        let root = psd_sqrt(e.matrix())?;
        for i in 0..d {
            for j in 0..d {
                v[(i * n + k, j)] = root[(i, j)];
            }
        }
    }
    let mut dims = p.dims().to_vec();
    dims.push(n);
    let shape = SystemShape::new(dims)?;
    let effects = (0..n)
        .map(|k| {
            let mut proj = CMatrix::zeros(n, n);
            proj[(k, k)] = r(1.0);
            Operator::new(CMatrix::identity(d).kron(&proj), shape.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NaimarkDilation { povm: Povm::new(effects, p.labels().to_vec())?, isometry: v })
}

/// Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli() -> [CMatrix; 3] {
    let sx = CMatrix::from_rows(&[vec![r(0.0), r(1.0)], vec![r(1.0), r(0.0)]]).expect("2x2");
    let sy = CMatrix::from_rows(&[vec![r(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), r(0.0)]]).expect("2x2");
    let sz = CMatrix::from_rows(&[vec![r(1.0), r(0.0)], vec![r(0.0), r(-1.0)]]).expect("2x2");
    [sx, sy, sz]
}

/// Two-outcome measurement `{(1+O)/2, (1−O)/2}` of a ±1 observable; outcome 0 is `+1`.
pub fn observable_povm(o: &CMatrix) -> Result<Povm> {
    let d = o.rows();
    let id = CMatrix::identity(d);
    let plus = (&id + o).scale_real(0.5);
    let minus = (&id - o).scale_real(0.5);
    Povm::from_matrices(vec![plus, minus], vec![d])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_weyl_is_pauli() {
        let w = weyl_operators(2).unwrap();
        let [sx, _, sz] = pauli();
        assert!(w.x.max_abs_diff(&sx) < 1e-15);
        assert!(w.z.max_abs_diff(&sz) < 1e-15);
        assert!((w.omega - r(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn bell_ordering_for_qubits() {
        let b = bell_basis(2).unwrap();
        let s = FRAC_1_SQRT_2;
        let expect = [
            [s, 0.0, 0.0, s],
            [s, 0.0, 0.0, -s],
            [0.0, s, s, 0.0],
            [0.0, -s, s, 0.0],
        ];
        for (m, e) in expect.iter().enumerate() {
            for (z, &v) in b[m].amplitudes().iter().zip(e) {
                assert!((z - r(v)).norm() < 1e-15, "m={m}");
            }
        }
    }

    #[test]
    fn noisy_bsm_eigenvalues() {
        let p = noisy_bsm(2, 0.95).unwrap();
        let ev = crate::linalg::hermitian_eigenvalues(p.effect(0)).unwrap();
        let expect = [0.0125, 0.0125, 0.0125, 0.9625];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn case_ensembles_are_incomplete() {
        let r1 = is_tomographically_complete(&qutrit_case1()).unwrap();
        assert!(!r1.complete);
        assert_eq!(r1.rank, 4);
        let r2 = is_tomographically_complete(&qutrit_case2()).unwrap();
        assert!(!r2.complete);
        assert_eq!(qutrit_case2().len(), 6);
    }

    #[test]
    fn trine_dilates_to_three_dimensions() {
        let mats = (0..3)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 3.0;
                let v = [r((t / 2.0).cos()), r((t / 2.0).sin())];
                Matrix::outer(&v, &v).scale_real(2.0 / 3.0)
            })
            .collect();
        let trine = Povm::from_matrices(mats, vec![2]).unwrap();
        let dil = naimark_dilate(&trine).unwrap();
        assert_eq!(dil.povm.dim(), 3);
        assert!(dil.povm.is_projective(1e-12));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(weyl_operators(1).is_err());
        assert!(correcting_unitary(4, 2).is_err());
        assert!(isotropic_state(2, 1.5).is_err());
        assert!(InputEnsemble::new(vec![], vec![]).is_err());
    }
}
