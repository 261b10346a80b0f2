//! Certification engines: condition checkers, SWAP-isometry outputs and
//! the Bell-like functionals of the quantum-input scenarios.

use crate::effective::{effective_multipartite, effective_qc, EffectiveSet, InputSlot, OutcomeKey, ProbKey, ProbTable};
use crate::error::{arg, Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_fn, psd_sqrt};
use crate::qobjects::{
    correcting_unitary, maximally_entangled, naimark_dilate, qc_inputs, r, DensityMatrix, InputEnsemble, Povm, PureState,
};
use crate::tensor::{embed, partial_trace, SystemShape};
use crate::{c64, CMatrix, Operator};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Pass/fail threshold used when the caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Which certificate a [`CertReport`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertKind {
    Joint,
    Multipartite,
    Qc,
    Chsh,
}

/// Outcome of a certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub scenario: CertKind,
    /// Fidelity of the extracted state with the reference, clamped to `[0, 1]`.
    /// `None` when the certificate does not produce one.
    pub fidelity_estimate: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
    /// `true` iff every residual is at most `tol`.
    pub pass: bool,
    pub tol: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CertReport {
    fn build(
        scenario: CertKind,
        fidelity: Option<f64>,
        residuals: BTreeMap<String, f64>,
        mut diagnostics: BTreeMap<String, f64>,
        tol: f64,
    ) -> Self {
        let fidelity_estimate = fidelity.map(|f| {
            if !(0.0..=1.0).contains(&f) {
                diagnostics.insert("fidelity_unclamped".into(), f);
            }
            f.clamp(0.0, 1.0)
        });
        let pass = residuals.values().all(|&v| v <= tol);
        Self { scenario, fidelity_estimate, residuals, pass, tol, diagnostics }
    }

    /// Largest residual (`NaN` if any residual is `NaN`).
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().fold(0.0, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
    }

    /// Label and value of the largest residual.
    pub fn worst(&self) -> Option<(&str, f64)> {
        self.residuals
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, &v)| (k.as_str(), v))
    }
}

fn key_label(outcomes: &[usize]) -> String {
    let parts: Vec<String> = outcomes.iter().map(usize::to_string).collect();
    parts.join(",")
}

/// `⟨ψ|ρ|ψ⟩` without requiring `ρ` to be a valid state.
fn overlap(rho: &CMatrix, psi: &[c64]) -> f64 {
    crate::linalg::vec_inner(psi, &rho.matvec(psi)).re
}

/// Corrected effective operators `(⊗U_{a_i}) M̃ᵀ (⊗U_{a_i})†` for every outcome tuple.
fn corrected_entries(eff: &EffectiveSet) -> Result<Vec<(Vec<usize>, CMatrix)>> {
    let dims = eff.primed_dims().to_vec();
    if eff.entries().keys().any(|k| k.setting.is_some()) {
        return arg("SWAP output needs an effective set without classical settings");
    }
    let counts: Vec<usize> = dims.iter().map(|d| d * d).collect();
    let all = crate::effective::tuples(&counts);
    let missing: Vec<String> = all
        .iter()
        .filter(|t| eff.get(&OutcomeKey::new(t.to_vec())).is_none())
        .map(|t| format!("({})", key_label(t)))
        .collect();
    if !missing.is_empty() {
        return arg(format!("effective set is missing outcomes {}", missing.join(" ")));
    }
    let units: Vec<Vec<CMatrix>> = dims
        .iter()
        .map(|&d| (0..d * d).map(|m| correcting_unitary(m, d)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(all.len());
    for t in all {
        let u = t
            .iter()
            .enumerate()
            .map(|(i, &a)| units[i][a].clone())
            .reduce(|x, y| x.kron(&y))
            .expect("at least one register");
        let m = eff.entry(&t)?.transpose();
        out.push((t, u.matmul(&m).matmul(&u.adjoint())));
    }
    Ok(out)
}

fn swap_from_corrected(corrected: &[(Vec<usize>, CMatrix)], shape: &SystemShape) -> Result<Operator> {
    let n = shape.total_dim();
    let mut acc = CMatrix::zeros(n, n);
    for (_, m) in corrected {
        acc.axpy(r(1.0), m);
    }
    Operator::hermitian(acc.scale_real(1.0 / n as f64).hermitian_part(), shape.clone())
}

/// `(1/dⁿ) Σ (⊗U_{a_i}) M̃ᵀ (⊗U_{a_i})†`, the state the SWAP isometry extracts.
///
/// Returned as a Hermitian operator: it has unit trace whenever the set sums
/// to the identity, but reconstructed data need not make it positive.
pub fn swap_output(eff: &EffectiveSet, d: usize) -> Result<Operator> {
    if eff.primed_dims().iter().any(|&x| x != d) {
        return arg(format!("effective set acts on {:?}, expected qudits of dimension {d}", eff.primed_dims()));
    }
    let corrected = corrected_entries(eff)?;
    swap_from_corrected(&corrected, eff.shape())
}

fn certify_corrected(eff: &EffectiveSet, reference: &PureState, tol: f64, kind: CertKind) -> Result<CertReport> {
    let dims = eff.primed_dims();
    if reference.shape().dims() != dims {
        return arg(format!("reference acts on {:?}, effective set on {:?}", reference.shape().dims(), dims));
    }
    let corrected = corrected_entries(eff)?;
    let n = eff.shape().total_dim();
    let target = reference.projector().into_matrix().scale_real(1.0 / n as f64);
    let mut residuals = BTreeMap::new();
    for (t, m) in &corrected {
        residuals.insert(format!("M[{}]", key_label(t)), m.max_abs_diff(&target));
    }
    let out = swap_from_corrected(&corrected, eff.shape())?;
    let fid = overlap(out.matrix(), reference.amplitudes());
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("swap_trace".into(), out.trace().re);
    diagnostics.insert("completeness_defect".into(), eff.completeness_defect(None));
    diagnostics.insert("negative_entries".into(), eff.negativity().len() as f64);
    Ok(CertReport::build(kind, Some(fid), residuals, diagnostics, tol))
}

/// Checks `(U_a⊗U_b) M̃_{a,b}ᵀ (U_a⊗U_b)† = |ψ⟩⟨ψ|/d²` for every outcome pair.
pub fn check_theorem1(eff: &EffectiveSet, reference: &PureState, tol: f64) -> Result<CertReport> {
    if eff.primed_dims().len() != 2 {
        return arg("bipartite check needs an effective set on two input registers");
    }
    certify_corrected(eff, reference, tol, CertKind::Joint)
}

/// The `n`-party version of [`check_theorem1`], starting from the physical setup.
pub fn multipartite_certify(
    rho: &DensityMatrix,
    parties: &[(&Povm, InputSlot)],
    reference: &PureState,
    tol: f64,
) -> Result<CertReport> {
    if parties.len() < 2 {
        return arg("multipartite certification needs at least two parties");
    }
    let eff = effective_multipartite(rho, parties)?;
    certify_corrected(&eff, reference, tol, CertKind::Multipartite)
}

/// How the SWAP circuit realizes a measurement that may not be projective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitMode {
    /// Kraus operators `√M_k`.
    #[default]
    SqrtKraus,
    /// Projective measurement after a Naimark isometry.
    Naimark,
}

fn kraus_operators(p: &Povm, mode: CircuitMode) -> Result<Vec<CMatrix>> {
    match mode {
        CircuitMode::SqrtKraus => p.effects().iter().map(|e| psd_sqrt(e.matrix())).collect(),
        CircuitMode::Naimark => {
            let dil = naimark_dilate(p)?;
            Ok(dil.povm.effects().iter().map(|e| e.matrix().matmul(&dil.isometry)).collect())
        }
    }
}

/// `Σ_o ⟨o|K S K†|o⟩` with `K` acting on the middle factor of `left ⊗ mid ⊗ right`.
fn kraus_trace(s: &CMatrix, left: usize, mid: usize, right: usize, k: &CMatrix) -> CMatrix {
    let outs = k.rows();
    let n = left * right;
    let at = |l: usize, i: usize, rr: usize| (l * mid + i) * right + rr;
    let mut res = CMatrix::zeros(n, n);
    let mut ks = vec![r(0.0); outs * mid];
    for l in 0..left {
        for rr in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    // (K B)[o, j] with B[i, j] = S[(l,i,rr), (l2,j,r2)].
                    for o in 0..outs {
                        for j in 0..mid {
                            let mut acc = r(0.0);
                            for i in 0..mid {
                                acc += k[(o, i)] * s[(at(l, i, rr), at(l2, j, r2))];
                            }
                            ks[o * mid + j] = acc;
                        }
                    }
                    let mut acc = r(0.0);
                    for o in 0..outs {
                        for j in 0..mid {
                            acc += ks[o * mid + j] * k[(o, j)].conj();
                        }
                    }
                    res[(l * right + rr, l2 * right + r2)] = acc;
                }
            }
        }
    }
    res
}

/// Discrete Fourier transform `F|k⟩ = d^{-1/2} Σ_j ω^{jk} |j⟩`.
pub fn fourier(d: usize) -> Result<CMatrix> {
    let w = crate::qobjects::weyl_operators(d)?;
    let s = 1.0 / (d as f64).sqrt();
    Ok(CMatrix::from_fn(d, d, |j, k| w.z[(j * k % d, j * k % d)] * s))
}

/// `|j, k⟩ ↦ |j, j + k⟩`.
fn controlled_shift(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            m[(j * d + (j + k) % d, j * d + k)] = r(1.0);
        }
    }
    m
}

/// Ancilla pair prepared by `CNOT·(F ⊗ 1)|00⟩`.
fn ancilla_pair(d: usize) -> Result<CMatrix> {
    let prep = controlled_shift(d).matmul(&fourier(d)?.kron(&CMatrix::identity(d)));
    let v = prep.col(0);
    Ok(CMatrix::outer(&v, &v))
}

/// Output of the SWAP circuit on A″⊗B″ for the physical devices.
///
/// Registers are A″ A′ A B B′ B″. Alice's measurement acts on A′⊗A and Bob's
/// on B⊗B′; each branch applies the correcting unitary of its outcome to the
/// fresh register before everything except A″B″ is discarded.
pub fn circuit_output(rho: &DensityMatrix, povm_a: &Povm, povm_b: &Povm, mode: CircuitMode) -> Result<DensityMatrix> {
    let sdims = rho.dims();
    if sdims.len() != 2 {
        return arg("SWAP circuit needs a bipartite state");
    }
    let (da, db) = (sdims[0], sdims[1]);
    let (pa, pb) = match (povm_a.dims(), povm_b.dims()) {
        ([pa, a], [b, pb]) if *a == da && *b == db => (*pa, *pb),
        _ => {
            return arg(format!(
                "measurements on {:?} and {:?} do not fit a state on {:?}",
                povm_a.dims(),
                povm_b.dims(),
                sdims
            ))
        }
    };
    if povm_a.len() != pa * pa || povm_b.len() != pb * pb {
        return arg("SWAP circuit needs d² outcomes per party");
    }
    let ka = kraus_operators(povm_a, mode)?;
    let kb = kraus_operators(povm_b, mode)?;
    let ua: Vec<CMatrix> = (0..pa * pa)
        .map(|m| Ok(correcting_unitary(m, pa)?.kron(&CMatrix::identity(db))))
        .collect::<Result<_>>()?;
    let ub: Vec<CMatrix> = (0..pb * pb)
        .map(|m| Ok(CMatrix::identity(pa).kron(&correcting_unitary(m, pb)?)))
        .collect::<Result<_>>()?;
    let phi_b = ancilla_pair(pb)?;
    let start = ancilla_pair(pa)?.kron(rho.matrix());
    let mut out = CMatrix::zeros(pa * pb, pa * pb);
    for (a, k) in ka.iter().enumerate() {
        // Alice's branch leaves A″⊗B.
        let sigma = kraus_trace(&start, pa, pa * da, db, k);
        let sigma = ua[a].matmul(&sigma).matmul(&ua[a].adjoint());
        let joined = sigma.kron(&phi_b);
        for (b, kbb) in kb.iter().enumerate() {
            let tau = kraus_trace(&joined, pa, db * pb, pb, kbb);
            out.axpy(r(1.0), &ub[b].matmul(&tau).matmul(&ub[b].adjoint()));
        }
    }
    DensityMatrix::from_matrix(out.hermitian_part(), vec![pa, pb])
}

/// Terms of the I_qc functional: `(input, setting, [(a, b); 4])`, inputs in
/// the order ψ₀, ψ̄₀, ψ₁, ψ̄₁.
pub const IQC_GROUPS: [(usize, usize, [(usize, usize); 4]); 4] = [
    (0, 0, [(0, 0), (1, 0), (2, 1), (3, 1)]),
    (1, 0, [(0, 1), (1, 1), (2, 0), (3, 0)]),
    (2, 1, [(0, 0), (2, 0), (1, 1), (3, 1)]),
    (3, 1, [(0, 1), (2, 1), (1, 0), (3, 0)]),
];

/// The four group sums of I_qc; each equals one at the algebraic maximum.
pub fn iqc_groups(table: &ProbTable) -> Result<[f64; 4]> {
    let mut sums = [0.0; 4];
    let mut missing = Vec::new();
    for (g, (x, y, terms)) in IQC_GROUPS.iter().enumerate() {
        for &(a, b) in terms {
            match table.p_setting(&[a, b], &[*x], *y) {
                Some(p) => sums[g] += p,
                None => missing.push(format!("p({a},{b}|x={x},y={y})")),
            }
        }
    }
    if !missing.is_empty() {
        return arg(format!("probability table lacks {}", missing.join(", ")));
    }
    Ok(sums)
}

/// The I_qc functional, algebraic maximum 4.
pub fn iqc(table: &ProbTable) -> Result<f64> {
    Ok(iqc_groups(table)?.iter().sum())
}

fn qubit_projector(v: [f64; 2]) -> CMatrix {
    let v = [r(v[0]), r(v[1])];
    CMatrix::outer(&v, &v)
}

/// Projector that `M̃_{a,b|y}` must be proportional to at I_qc = 4.
fn qc_target(a: usize, b: usize, y: usize) -> CMatrix {
    let s = FRAC_1_SQRT_2;
    match y {
        0 => {
            if ((a >= 2) as usize) ^ b == 0 {
                qubit_projector([1.0, 0.0])
            } else {
                qubit_projector([0.0, 1.0])
            }
        }
        _ => {
            if (a % 2) ^ b == 0 {
                qubit_projector([s, s])
            } else {
                qubit_projector([s, -s])
            }
        }
    }
}

fn sign_of(o: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(o, |x| if x >= -1e-12 { 1.0 } else { -1.0 })
}

fn controlled(u: &CMatrix) -> CMatrix {
    let n = u.rows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = r(1.0);
        for j in 0..n {
            m[(n + i, n + j)] = u[(i, j)];
        }
    }
    m
}

/// Output of the quantum-classical SWAP isometry on A″⊗B′.
///
/// Registers are A″ A₁′ A₂′ A B B′; A₂′ starts in |+⟩, the others in |0⟩.
/// Observables that are not ±1-valued are replaced by their sign.
pub fn qc_isometry_output(rho: &DensityMatrix, povm_a: &Povm, bob_settings: &[Povm]) -> Result<DensityMatrix> {
    check_qc_devices(rho, povm_a, bob_settings)?;
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    let m = |k: usize| povm_a.effect(k);
    let mz = sign_of(&(&(m(0) + m(1)) - &(m(2) + m(3))))?;
    let mx = sign_of(&(&(m(0) + m(2)) - &(m(1) + m(3))))?;
    let b0 = sign_of(&(bob_settings[0].effect(0) - bob_settings[0].effect(1)))?;
    let b1 = sign_of(&(bob_settings[1].effect(0) - bob_settings[1].effect(1)))?;

    let shape = SystemShape::new(vec![2, 2, 2, da, db, 2])?;
    let s = FRAC_1_SQRT_2;
    let h = CMatrix::from_rows(&[vec![r(s), r(s)], vec![r(s), r(-s)]])?;
    let hh = embed(&h, &[0], &shape)?.matmul(&embed(&h, &[5], &shape)?);
    let first = embed(&controlled(&mz), &[0, 1, 3], &shape)?.matmul(&embed(&controlled(&b0), &[5, 4], &shape)?);
    let second = embed(&controlled(&mx), &[0, 2, 3], &shape)?.matmul(&embed(&controlled(&b1), &[5, 4], &shape)?);
    let u = second.matmul(&hh).matmul(&first).matmul(&hh);

    let zero = qubit_projector([1.0, 0.0]);
    let plus = qubit_projector([s, s]);
    let init = zero.kron(&zero).kron(&plus).kron(rho.matrix()).kron(&zero);
    let out = Operator::new(u.matmul(&init).matmul(&u.adjoint()), shape)?;
    let reduced = partial_trace(&out, &[0, 5])?;
    DensityMatrix::from_matrix(reduced.into_matrix().hermitian_part(), vec![2, 2])
}

fn check_qc_devices(rho: &DensityMatrix, povm_a: &Povm, bob_settings: &[Povm]) -> Result<()> {
    if rho.dims().len() != 2 {
        return arg("quantum-classical certification needs a bipartite state");
    }
    if povm_a.dims() != [2, rho.dims()[0]] || povm_a.len() != 4 {
        return arg("Alice needs a four-outcome measurement on a qubit input and her share");
    }
    if bob_settings.len() != 2 || bob_settings.iter().any(|b| b.len() != 2 || b.dims() != [rho.dims()[1]]) {
        return arg("Bob needs two binary measurements on his share");
    }
    Ok(())
}

/// [`qc_certify_with_inputs`] with the standard inputs |0⟩, |1⟩, |+⟩, |−⟩.
pub fn qc_certify(rho: &DensityMatrix, povm_a: &Povm, bob_settings: &[Povm], tol: f64) -> Result<CertReport> {
    qc_certify_with_inputs(rho, povm_a, bob_settings, &qc_inputs(), tol)
}

/// Certifies the maximally entangled qubit pair from the quantum-classical game.
///
/// Residuals: `iqc` (shortfall from 4), `prop[a,b|y]` (distance of each
/// effective operator from its target projector times its trace), `group[x]`
/// (group sums against the input projector), `mu[a]` (deviation of
/// `Tr M̃_{a,0|0}` from 1/4), `anticommutator` and `fidelity` (one minus the
/// isometry output fidelity).
pub fn qc_certify_with_inputs(
    rho: &DensityMatrix,
    povm_a: &Povm,
    bob_settings: &[Povm],
    inputs: &InputEnsemble,
    tol: f64,
) -> Result<CertReport> {
    let reference = qc_inputs();
    if inputs.labels() != reference.labels() {
        return arg(format!("inputs must be labelled {:?}, got {:?}", reference.labels(), inputs.labels()));
    }
    for (s, t) in inputs.states().iter().zip(reference.states()) {
        if s.dim() != 2 || (s.inner(t).norm() - 1.0).abs() > 1e-9 {
            return arg("inputs must be |0⟩, |1⟩, |+⟩, |−⟩");
        }
    }
    check_qc_devices(rho, povm_a, bob_settings)?;
    let eff = effective_qc(rho, povm_a, bob_settings)?;
    let table = eff.forward(&[inputs])?;
    let groups = iqc_groups(&table)?;
    let value: f64 = groups.iter().sum();

    let mut residuals = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    residuals.insert("iqc".into(), 4.0 - value);
    diagnostics.insert("iqc".into(), value);
    let get = |a: usize, b: usize, y: usize| -> Result<&CMatrix> {
        eff.get(&OutcomeKey::with_setting(vec![a, b], y))
            .map(Operator::matrix)
            .ok_or_else(|| Error::Argument(format!("missing effective entry ({a},{b}|{y})")))
    };
    for y in 0..2 {
        for a in 0..4 {
            for b in 0..2 {
                let m = get(a, b, y)?;
                let tr = m.trace().re;
                let dev = m.max_abs_diff(&qc_target(a, b, y).scale_real(tr));
                residuals.insert(format!("prop[{a},{b}|{y}]"), dev);
                diagnostics.insert(format!("{}[{a},{b}]", if y == 0 { "mu" } else { "nu" }), tr);
            }
        }
    }
    for (g, (x, y, terms)) in IQC_GROUPS.iter().enumerate() {
        let mut acc = CMatrix::zeros(2, 2);
        for &(a, b) in terms {
            acc.axpy(r(1.0), get(a, b, *y)?);
        }
        let target = inputs.states()[*x].projector().into_matrix();
        residuals.insert(format!("group[{x}]"), acc.max_abs_diff(&target));
        diagnostics.insert(format!("group_sum[{g}]"), groups[g]);
    }
    for a in 0..4 {
        residuals.insert(format!("mu[{a}]"), (get(a, 0, 0)?.trace().re - 0.25).abs());
    }

    let b0 = bob_settings[0].effect(0) - bob_settings[0].effect(1);
    let b1 = bob_settings[1].effect(0) - bob_settings[1].effect(1);
    let rho_b = partial_trace(rho.operator(), &[1])?.into_matrix();
    let anti = &b0.matmul(&b1) + &b1.matmul(&b0);
    let witness = anti.matmul(&rho_b).max_abs();
    residuals.insert("anticommutator".into(), witness);
    diagnostics.insert("anticommutator".into(), witness);

    let out = qc_isometry_output(rho, povm_a, bob_settings)?;
    let fid = overlap(out.matrix(), maximally_entangled(2)?.amplitudes());
    residuals.insert("fidelity".into(), 1.0 - fid);
    Ok(CertReport::build(CertKind::Qc, Some(fid), residuals, diagnostics, tol))
}

/// Quantum-classical certificate from the probability table alone.
///
/// Checks `I_qc = 4`, each group at its maximum and `μ_a = 1/4`, where
/// `Tr M̃_{a,b|y} = p(a,b|ψ₀,y) + p(a,b|ψ̄₀,y)`. The extracted state needs the
/// devices, so no fidelity is reported.
pub fn qc_certify_table(table: &ProbTable, tol: f64) -> Result<CertReport> {
    let groups = iqc_groups(table)?;
    let value: f64 = groups.iter().sum();
    let mut residuals = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    residuals.insert("iqc".into(), 4.0 - value);
    diagnostics.insert("iqc".into(), value);
    for (g, (x, _, _)) in IQC_GROUPS.iter().enumerate() {
        residuals.insert(format!("group[{x}]"), 1.0 - groups[g]);
        diagnostics.insert(format!("group_sum[{g}]"), groups[g]);
    }
    let trace = |a: usize, b: usize, y: usize| -> Result<f64> {
        let get = |x: usize| {
            table
                .p_setting(&[a, b], &[x], y)
                .ok_or_else(|| Error::Argument(format!("probability table lacks p({a},{b}|x={x},y={y})")))
        };
        Ok(get(0)? + get(1)?)
    };
    for y in 0..2 {
        for a in 0..4 {
            for b in 0..2 {
                diagnostics.insert(format!("{}[{a},{b}]", if y == 0 { "mu" } else { "nu" }), trace(a, b, y)?);
            }
        }
    }
    for a in 0..4 {
        residuals.insert(format!("mu[{a}]"), (trace(a, 0, 0)? - 0.25).abs());
    }
    Ok(CertReport::build(CertKind::Qc, None, residuals, diagnostics, tol))
}

/// `X_j^±` of the CHSH construction for one party.
#[derive(Clone, Debug)]
pub struct BinaryObservable {
    pub plus: CMatrix,
    pub minus: CMatrix,
}

impl BinaryObservable {
    pub fn observable(&self) -> CMatrix {
        &self.plus - &self.minus
    }

    /// `max(‖X⁺+X⁻−1‖, −λ_min(X⁺), −λ_min(X⁻))`, zero for a valid measurement.
    pub fn validity_defect(&self) -> Result<f64> {
        let id = CMatrix::identity(self.plus.rows());
        let completeness = (&self.plus + &self.minus).max_abs_diff(&id);
        let lp = hermitian_eigenvalues(&self.plus)?[0];
        let lm = hermitian_eigenvalues(&self.minus)?[0];
        Ok(completeness.max(-lp).max(-lm).max(0.0))
    }
}

/// `Tr_{X′}[(ψ ⊗ 1)(Σ_{k∈S} M_k)]` on the share register.
fn reduced_effect(p: &Povm, slot: InputSlot, psi: &PureState, outcomes: &[usize]) -> Result<CMatrix> {
    let (primed, share) = match slot {
        InputSlot::First => (0, 1),
        InputSlot::Last => (1, 0),
    };
    if p.dims().len() != 2 || p.dims()[primed] != psi.dim() {
        return arg("measurement does not act on an input register of the input's dimension");
    }
    let n = p.dim();
    let mut sum = CMatrix::zeros(n, n);
    for &k in outcomes {
        sum.axpy(r(1.0), p.effect(k));
    }
    let lifted = embed(&psi.projector().into_matrix(), &[primed], p.shape())?;
    let op = Operator::new(lifted.matmul(&sum), p.shape().clone())?;
    Ok(partial_trace(&op, &[share])?.into_matrix())
}

/// `(X₀, X₁)` built from a four-outcome measurement and the inputs |0⟩, |+⟩.
pub fn chsh_observables(p: &Povm, slot: InputSlot) -> Result<[BinaryObservable; 2]> {
    if p.len() != 4 {
        return arg("CHSH construction needs a four-outcome measurement");
    }
    let inputs = crate::qobjects::chsh_inputs();
    let (psi0, psi1) = (&inputs.states()[0], &inputs.states()[1]);
    Ok([
        BinaryObservable { plus: reduced_effect(p, slot, psi0, &[0, 1])?, minus: reduced_effect(p, slot, psi0, &[2, 3])? },
        BinaryObservable { plus: reduced_effect(p, slot, psi1, &[0, 2])?, minus: reduced_effect(p, slot, psi1, &[1, 3])? },
    ])
}

/// CHSH value from measurements fed with the quantum inputs |0⟩ and |+⟩.
///
/// Alice's measurement acts on A′⊗A and Bob's on B⊗B′. Residuals are
/// `chsh` (shortfall from 2√2) and `valid[X_j]` per observable. The
/// diagnostic `chsh_best` is the largest value over the eight sign patterns
/// of the CHSH expression.
pub fn chsh_quantum_inputs(rho: &DensityMatrix, povm_a: &Povm, povm_b: &Povm) -> Result<CertReport> {
    chsh_quantum_inputs_tol(rho, povm_a, povm_b, DEFAULT_TOL)
}

pub fn chsh_quantum_inputs_tol(rho: &DensityMatrix, povm_a: &Povm, povm_b: &Povm, tol: f64) -> Result<CertReport> {
    if rho.dims().len() != 2 {
        return arg("CHSH needs a bipartite state");
    }
    if povm_a.dims().get(1) != Some(&rho.dims()[0]) || povm_b.dims().first() != Some(&rho.dims()[1]) {
        return arg("measurements do not match the shares of the state");
    }
    let alice = chsh_observables(povm_a, InputSlot::First)?;
    let bob = chsh_observables(povm_b, InputSlot::Last)?;
    let mut residuals = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    for (name, obs) in [("A", &alice), ("B", &bob)] {
        for (j, o) in obs.iter().enumerate() {
            residuals.insert(format!("valid[{name}{j}]"), o.validity_defect()?);
            let x = o.observable();
            let sq = x.matmul(&x).max_abs_diff(&CMatrix::identity(x.rows()));
            diagnostics.insert(format!("square_defect[{name}{j}]"), sq);
        }
    }
    let mut corr = [[0.0; 2]; 2];
    for (i, a) in alice.iter().enumerate() {
        for (j, b) in bob.iter().enumerate() {
            corr[i][j] = a.observable().kron(&b.observable()).trace_product(rho.matrix()).re;
            diagnostics.insert(format!("E[{i},{j}]"), corr[i][j]);
        }
    }
    let s = corr[0][0] + corr[0][1] + corr[1][0] - corr[1][1];
    let mut best = f64::NEG_INFINITY;
    for pattern in 0..16u32 {
        let signs: Vec<f64> = (0..4).map(|k| if pattern >> k & 1 == 1 { -1.0 } else { 1.0 }).collect();
        if signs.iter().product::<f64>() > 0.0 {
            continue;
        }
        let v = signs[0] * corr[0][0] + signs[1] * corr[0][1] + signs[2] * corr[1][0] + signs[3] * corr[1][1];
        best = best.max(v);
    }
    diagnostics.insert("chsh".into(), s);
    diagnostics.insert("chsh_best".into(), best);
    residuals.insert("chsh".into(), 2.0 * SQRT_2 - s);
    Ok(CertReport::build(CertKind::Chsh, None, residuals, diagnostics, tol))
}

/// `cos(π/8)|φ⁺⟩ + sin(π/8)|ψ⁺⟩`.
pub fn chsh_reference_state() -> PureState {
    let (c8, s8) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    let a = FRAC_1_SQRT_2;
    PureState::new(
        vec![r(c8 * a), r(s8 * a), r(s8 * a), r(c8 * a)],
        SystemShape::uniform(2, 2).expect("qubit pair"),
    )
    .expect("normalized by construction")
}

/// Probability table key of the quantum-classical game.
pub fn qc_key(a: usize, b: usize, x: usize, y: usize) -> ProbKey {
    ProbKey { outcomes: vec![a, b], inputs: vec![x], setting: Some(y) }
}
