//! Teleportation experiments as self-tests.
//!
//! Bob's conditional states `φ_{a|x}` constrain the effective teleportation
//! measurements `M̃_a` on A′⊗B. Minimizing the fidelity of the SWAP-type
//! output `ρ_o = (1/d) Σ_a U_a M̃_a^{T_{A′}} U_a†` with `φ⁺` over all
//! compatible `M̃_a` gives a certified lower bound on the fidelity of the
//! shared state.

use crate::effective::{inverse_designs, EffectiveSet, OutcomeKey, Scenario};
use crate::error::{arg, Error, Result};
use crate::tensor::psd_check_matrix;
use crate::qobjects::{correcting_unitary, maximally_entangled, r, DensityMatrix, InputEnsemble, Povm};
use crate::sdp::{solve, HermitianConstraint, HermitianProgram, SdpProblem, SdpStatus, SolverOptions};
use crate::tensor::{partial_trace, partial_transpose, SystemShape};
use crate::{c64, CMatrix, Operator};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tolerance for positivity of the conditional states.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for normalization and no-signalling of the data.
pub const DATA_TOL: f64 = 1e-8;
/// Largest spread of `Σ_a φ_{a|x}` across inputs accepted by [`build_sdp`].
pub const CONSISTENCY_TOL: f64 = 1e-6;
/// Probability below which a branch is left out of the average fidelity.
pub const ZERO_BRANCH: f64 = 1e-12;

/// Bob's subnormalized states for every outcome and input.
#[derive(Clone, Debug, PartialEq)]
pub struct TeleportationData {
    d: usize,
    ensemble: InputEnsemble,
    n_outcomes: usize,
    states: BTreeMap<(usize, usize), Operator>,
}

impl TeleportationData {
    /// Validates positivity, normalization and no-signalling of the data.
    pub fn new(ensemble: InputEnsemble, n_outcomes: usize, states: BTreeMap<(usize, usize), Operator>) -> Result<Self> {
        if n_outcomes == 0 {
            return arg("teleportation data needs at least one outcome");
        }
        let d = ensemble.dim();
        let mut db = None;
        for a in 0..n_outcomes {
            for x in 0..ensemble.len() {
                let s = states.get(&(a, x)).ok_or_else(|| Error::Data(format!("missing state for outcome {a}, input {x}")))?;
                if s.shape().len() != 1 || *db.get_or_insert(s.dim()) != s.dim() {
                    return Err(Error::Data("conditional states must all act on one register of equal dimension".into()));
                }
                let rep = psd_check_matrix(s.matrix(), STATE_TOL)?;
                if !rep.is_psd {
                    return Err(Error::Data(format!(
                        "state for outcome {a}, input {x} has eigenvalue {:e}",
                        rep.min_eigenvalue
                    )));
                }
            }
        }
        if states.len() != n_outcomes * ensemble.len() {
            return Err(Error::Data(format!("{} states for {} outcomes and {} inputs", states.len(), n_outcomes, ensemble.len())));
        }
        let data = Self { d, ensemble, n_outcomes, states };
        let sums = data.marginals();
        for (x, m) in sums.iter().enumerate() {
            let tr = m.trace().re;
            if (tr - 1.0).abs() > DATA_TOL {
                return Err(Error::Data(format!("probabilities for input {x} sum to {tr}")));
            }
            if m.max_abs_diff(&sums[0]) > DATA_TOL {
                return Err(Error::Data(format!("Bob's marginal for input {x} differs from input 0 (signalling data)")));
            }
        }
        Ok(data)
    }

    /// Dimension of the teleported system.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Dimension of Bob's register.
    pub fn bob_dim(&self) -> usize {
        self.states.values().next().map_or(0, Operator::dim)
    }

    pub fn ensemble(&self) -> &InputEnsemble {
        &self.ensemble
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn states(&self) -> &BTreeMap<(usize, usize), Operator> {
        &self.states
    }

    /// `φ_{a|x}`.
    pub fn state(&self, a: usize, x: usize) -> &CMatrix {
        self.states[&(a, x)].matrix()
    }

    /// `p(a|ψ_x) = Tr φ_{a|x}`.
    pub fn probability(&self, a: usize, x: usize) -> f64 {
        self.state(a, x).trace().re
    }

    /// `Σ_a φ_{a|x}` per input.
    pub fn marginals(&self) -> Vec<CMatrix> {
        (0..self.ensemble.len())
            .map(|x| {
                let n = self.bob_dim();
                let mut acc = CMatrix::zeros(n, n);
                for a in 0..self.n_outcomes {
                    acc.axpy(r(1.0), self.state(a, x));
                }
                acc
            })
            .collect()
    }
}

/// `φ_{a|x} = Tr_{A′A}[(M_a ⊗ 1_B)(ψ_x ⊗ ρ)]`.
pub fn teleport(rho: &DensityMatrix, povm_a: &Povm, ensemble: &InputEnsemble) -> Result<TeleportationData> {
    let sdims = rho.dims();
    if sdims.len() != 2 {
        return arg("teleportation needs a bipartite state");
    }
    if povm_a.dims() != [ensemble.dim(), sdims[0]] {
        return arg(format!(
            "Alice's measurement acts on {:?}, expected input {} and share {}",
            povm_a.dims(),
            ensemble.dim(),
            sdims[0]
        ));
    }
    let db = sdims[1];
    let shape = SystemShape::new(vec![ensemble.dim(), sdims[0], db])?;
    let id_b = CMatrix::identity(db);
    let bob_shape = SystemShape::new(vec![db])?;
    let mut states = BTreeMap::new();
    for (x, psi) in ensemble.states().iter().enumerate() {
        let joint = psi.projector().into_matrix().kron(rho.matrix());
        for a in 0..povm_a.len() {
            let op = Operator::new(povm_a.effect(a).kron(&id_b).matmul(&joint), shape.clone())?;
            let phi = partial_trace(&op, &[2])?.into_matrix().hermitian_part();
            states.insert((a, x), Operator::hermitian(phi, bob_shape.clone())?);
        }
    }
    TeleportationData::new(ensemble.clone(), povm_a.len(), states)
}

/// `p`-weighted average of the corrected output fidelities `⟨ψ_x|V_a φ̂_{a|x} V_a†|ψ_x⟩`,
/// with `φ̂` the normalized conditional state, averaged over inputs.
///
/// Outcome `a` labels the projector `(1 ⊗ U_a)φ⁺` on A′⊗A (see [`crate::effective::party_bsm`]),
/// which Bob undoes with `V_a = U_aᵀ`. This is the labelling under which [`rho_o`] is the
/// output of the swap circuit; for qubits `V_a = ±U_a`.
///
/// Returns the value and the number of branches skipped for zero probability.
pub fn average_fidelity_with_skips(data: &TeleportationData) -> Result<(f64, usize)> {
    let d = data.d();
    if data.bob_dim() != d {
        return arg("average fidelity needs Bob's register to match the input dimension");
    }
    if data.n_outcomes() != d * d {
        return arg("average fidelity needs one correcting unitary per outcome (d² outcomes)");
    }
    let mut skipped = 0;
    let mut total = 0.0;
    for (x, psi) in data.ensemble().states().iter().enumerate() {
        let mut branch_mass = 0.0;
        for a in 0..data.n_outcomes() {
            let p = data.probability(a, x);
            if p < ZERO_BRANCH {
                skipped += 1;
                continue;
            }
            branch_mass += p;
            let u = correcting_unitary(a, d)?.transpose();
            let corrected = u.matmul(data.state(a, x)).matmul(&u.adjoint());
            let v = psi.amplitudes();
            let f = crate::linalg::vec_inner(v, &corrected.matvec(v)).re / p;
            total += p * f;
        }
        if branch_mass == 0.0 {
            return Err(Error::Data(format!("every outcome has zero probability for input {x}")));
        }
    }
    Ok(((total / data.ensemble().len() as f64).clamp(0.0, 1.0), skipped))
}

/// See [`average_fidelity_with_skips`].
pub fn average_fidelity(data: &TeleportationData) -> Result<f64> {
    Ok(average_fidelity_with_skips(data)?.0)
}

/// State fidelity implied by an average teleportation fidelity for a state on `d×d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HhhFidelity {
    pub value: f64,
    /// The inverted value fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// Inverts `F̄ = (F_s d + 1)/(d + 1)`.
pub fn hhh_state_fidelity(f_tel: f64, d: usize) -> HhhFidelity {
    let raw = (f_tel * (d as f64 + 1.0) - 1.0) / d as f64;
    let value = raw.clamp(0.0, 1.0);
    HhhFidelity { value, clamped: value != raw }
}

/// `ρ_o = (1/d) Σ_a U_a M̃_a^{T_{A′}} U_a†` with the unitaries on A′.
pub fn rho_o(eff: &EffectiveSet, d: usize) -> Result<Operator> {
    let dims = eff.primed_dims();
    if dims.len() != 2 || dims[0] != d {
        return arg(format!("teleportation effective set on {:?} does not match dimension {d}", dims));
    }
    let db = dims[1];
    let n = d * db;
    let mut acc = CMatrix::zeros(n, n);
    for a in 0..d * d {
        let m = eff
            .get(&OutcomeKey::new(vec![a]))
            .ok_or_else(|| Error::Argument(format!("teleportation effective set lacks outcome {a}")))?;
        let pt = partial_transpose(m, 0)?;
        let u = correcting_unitary(a, d)?.kron(&CMatrix::identity(db));
        acc.axpy(r(1.0), &u.matmul(pt.matrix()).matmul(&u.adjoint()));
    }
    Operator::hermitian(acc.scale_real(1.0 / d as f64).hermitian_part(), eff.shape().clone())
}

/// Recovers `M̃_a` from the conditional states; the ensemble must be tomographically complete.
pub fn reconstruct_teleport(data: &TeleportationData) -> Result<EffectiveSet> {
    let (_, inverses, _, _) = inverse_designs(&[data.ensemble()])?;
    let inv = &inverses[0];
    let (d, db) = (data.d(), data.bob_dim());
    let shape = SystemShape::new(vec![d, db])?;
    let mut entries = BTreeMap::new();
    for a in 0..data.n_outcomes() {
        let mut m = CMatrix::zeros(d * db, d * db);
        for b in 0..db {
            for b2 in 0..db {
                let t: Vec<c64> = (0..data.ensemble().len()).map(|x| data.state(a, x)[(b, b2)]).collect();
                let block = inv.matvec(&t);
                for p in 0..d {
                    for p2 in 0..d {
                        m[(p * db + b, p2 * db + b2)] = block[p * d + p2];
                    }
                }
            }
        }
        entries.insert(OutcomeKey::new(vec![a]), Operator::hermitian(m.hermitian_part(), shape.clone())?);
    }
    EffectiveSet::new(Scenario::Teleport, shape, entries)
}

/// Hermitian basis of `n×n` matrices: diagonal units, then `|j⟩⟨k|+|k⟩⟨j|`
/// and `−i|j⟩⟨k| + i|k⟩⟨j|` for `j < k`.
fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut m = CMatrix::zeros(n, n);
        m[(j, j)] = r(1.0);
        out.push(m);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut s = CMatrix::zeros(n, n);
            s[(j, k)] = r(1.0);
            s[(k, j)] = r(1.0);
            out.push(s);
            let mut a = CMatrix::zeros(n, n);
            a[(j, k)] = c64::new(0.0, -1.0);
            a[(k, j)] = c64::new(0.0, 1.0);
            out.push(a);
        }
    }
    out
}

fn partial_transpose_first(m: &CMatrix, d: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(d * db, d * db, |i, j| {
        let (p, b) = (i / db, i % db);
        let (p2, b2) = (j / db, j % db);
        m[(p2 * db + b, p * db + b2)]
    })
}

/// Complex program over `Y_a = M̃_a^{T_{A′}} ⪰ 0`, one block per outcome:
///
/// * objective `(1/d) Σ_a Tr[Y_a (U_a†⊗1) φ⁺ (U_a⊗1)]`;
/// * data `Tr[(ψ_xᵀ ⊗ E) Y_a] = Tr[E φ_{a|x}]` for a Hermitian basis `E` of B;
/// * no-signalling `Σ_a Tr[F^{T_{A′}} Y_a] = Tr[F (1 ⊗ ρ_r)]` for a Hermitian basis `F` of A′B,
///   with `ρ_r` Bob's marginal averaged over inputs.
pub fn build_sdp(data: &TeleportationData) -> Result<HermitianProgram<f64>> {
    let (d, db) = (data.d(), data.bob_dim());
    if data.ensemble().is_empty() {
        return Err(Error::Precondition("teleportation data without inputs".into()));
    }
    if db != d {
        return arg(format!("fidelity with φ⁺ needs Bob's register ({db}) to match the input dimension ({d})"));
    }
    if data.n_outcomes() != d * d {
        return arg("teleportation SDP needs one correcting unitary per outcome (d² outcomes)");
    }
    let marginals = data.marginals();
    for (x, m) in marginals.iter().enumerate() {
        let spread = m.max_abs_diff(&marginals[0]);
        if spread > CONSISTENCY_TOL {
            return Err(Error::Data(format!("Bob's marginal for input {x} differs by {spread:e} from input 0")));
        }
    }
    let mut rho_r = CMatrix::zeros(db, db);
    for m in &marginals {
        rho_r.axpy(r(1.0 / marginals.len() as f64), m);
    }

    let n = d * db;
    let outcomes = data.n_outcomes();
    let mut prog = HermitianProgram::new("teleportation fidelity bound", vec![n; outcomes]);
    let phi = maximally_entangled(d)?.projector().into_matrix();
    for a in 0..outcomes {
        let u = correcting_unitary(a, d)?.kron(&CMatrix::identity(db));
        prog.objective[a] = u.adjoint().matmul(&phi).matmul(&u).scale_real(1.0 / d as f64).hermitian_part();
    }
    let basis_b = hermitian_basis(db);
    for a in 0..outcomes {
        for (x, psi) in data.ensemble().states().iter().enumerate() {
            let psi_t = psi.projector().into_matrix().transpose();
            for (k, e) in basis_b.iter().enumerate() {
                prog.constraints.push(HermitianConstraint {
                    terms: vec![(a, psi_t.kron(e))],
                    rhs: e.trace_product(data.state(a, x)).re,
                    label: format!("data[a={a},x={x},k={k}]"),
                });
            }
        }
    }
    let target = CMatrix::identity(d).kron(&rho_r);
    for (k, f) in hermitian_basis(n).iter().enumerate() {
        let ft = partial_transpose_first(f, d, db);
        prog.constraints.push(HermitianConstraint {
            terms: (0..outcomes).map(|a| (a, ft.clone())).collect(),
            rhs: f.trace_product(&target).re,
            label: format!("nosignal[k={k}]"),
        });
    }
    Ok(prog)
}

/// Certified lower bound on `⟨φ⁺|ρ|φ⁺⟩` from teleportation data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityBound {
    /// Present only when the solver reports an optimal solution.
    pub value: Option<f64>,
    pub status: SdpStatus,
    /// The dual objective fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub dropped_constraints: usize,
}

/// Realified program of [`build_sdp`].
pub fn build_real_sdp(data: &TeleportationData) -> Result<SdpProblem<f64>> {
    build_sdp(data)?.realify()
}

/// Solves the bound program. The reported value is the dual objective, which
/// is a valid lower bound for any dual-feasible point.
pub fn fidelity_lower_bound_with(data: &TeleportationData, opts: &SolverOptions<f64>) -> Result<FidelityBound> {
    let p = build_real_sdp(data)?;
    let s = solve(&p, opts)?;
    let (value, clamped) = if s.status == SdpStatus::Optimal {
        let v = s.dual_value.clamp(0.0, 1.0);
        (Some(v), v != s.dual_value)
    } else {
        (None, false)
    };
    Ok(FidelityBound {
        value,
        status: s.status,
        clamped,
        primal_value: s.primal_value,
        dual_value: s.dual_value,
        gap: s.gap,
        primal_residual: s.primal_residual,
        dual_residual: s.dual_residual,
        iterations: s.iterations,
        dropped_constraints: s.dropped.len(),
    })
}

/// [`fidelity_lower_bound_with`] at the default solver tolerance.
pub fn fidelity_lower_bound(data: &TeleportationData) -> Result<FidelityBound> {
    fidelity_lower_bound_with(data, &SolverOptions::default())
}
