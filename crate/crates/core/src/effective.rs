//! Effective measurements on the trusted input registers.
//!
//! An effective measurement folds the shared state and the untrusted
//! measurements into an operator on the primed (input) registers such that
//! `p(outcomes | inputs) = Tr[M̃ · (ψ_{x₁} ⊗ … ⊗ ψ_{xₙ})]`.

use crate::error::{arg, Error, Result};
use crate::linalg::pinv;
use crate::qobjects::{bsm, is_tomographically_complete, noisy_bsm, DensityMatrix, InputEnsemble, Povm, VALIDITY_TOL};
use crate::tensor::{kron_all, permute_subsystems, psd_check_matrix, SystemShape};
use crate::{c64, CMatrix, Operator};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Which protocol an [`EffectiveSet`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Joint,
    Qc,
    Teleport,
    Multipartite,
}

/// Where a party's trusted input register sits relative to its share of the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSlot {
    /// Measurement acts on input ⊗ share (Alice's A′⊗A).
    First,
    /// Measurement acts on share ⊗ input (Bob's B⊗B′).
    Last,
}

/// Outcome tuple, plus the classical setting in the quantum-classical scenario.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeKey {
    pub outcomes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<usize>,
}

impl OutcomeKey {
    pub fn new(outcomes: Vec<usize>) -> Self {
        Self { outcomes, setting: None }
    }

    pub fn with_setting(outcomes: Vec<usize>, setting: usize) -> Self {
        Self { outcomes, setting: Some(setting) }
    }
}

/// Outcome-indexed effective measurements on the primed registers.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveSet {
    scenario: Scenario,
    shape: SystemShape,
    entries: BTreeMap<OutcomeKey, Operator>,
    /// Entries whose minimum eigenvalue fell below `-1e-9` (reconstructed data only).
    negativity: Vec<(OutcomeKey, f64)>,
}

impl EffectiveSet {
    pub fn new(scenario: Scenario, shape: SystemShape, entries: BTreeMap<OutcomeKey, Operator>) -> Result<Self> {
        let mut negativity = Vec::new();
        for (k, op) in &entries {
            if op.dims() != shape.dims() {
                return arg(format!("entry {:?} acts on {:?}, expected {:?}", k.outcomes, op.dims(), shape.dims()));
            }
            let defect = op.matrix().hermiticity_defect();
            if defect > VALIDITY_TOL {
                return Err(Error::NumericalConsistency(format!(
                    "effective operator {:?} is not Hermitian (defect {defect:e})",
                    k.outcomes
                )));
            }
            let rep = psd_check_matrix(op.matrix(), VALIDITY_TOL)?;
            if !rep.is_psd {
                negativity.push((k.clone(), rep.min_eigenvalue));
            }
        }
        Ok(Self { scenario, shape, entries, negativity })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn primed_dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn entries(&self) -> &BTreeMap<OutcomeKey, Operator> {
        &self.entries
    }

    pub fn get(&self, key: &OutcomeKey) -> Option<&Operator> {
        self.entries.get(key)
    }

    /// Entry for an outcome tuple without a setting.
    pub fn entry(&self, outcomes: &[usize]) -> Result<&CMatrix> {
        self.entries
            .get(&OutcomeKey::new(outcomes.to_vec()))
            .map(Operator::matrix)
            .ok_or_else(|| Error::Argument(format!("missing effective entry for outcomes {outcomes:?}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries that are not positive semidefinite, with their minimum eigenvalue.
    pub fn negativity(&self) -> &[(OutcomeKey, f64)] {
        &self.negativity
    }

    /// Sum of all entries (per setting when `setting` is given).
    pub fn sum(&self, setting: Option<usize>) -> CMatrix {
        let n = self.shape.total_dim();
        let mut acc = CMatrix::zeros(n, n);
        for (k, op) in &self.entries {
            if setting.is_none() || k.setting == setting {
                acc.axpy(c64::new(1.0, 0.0), op.matrix());
            }
        }
        acc
    }

    /// Settings present in the set, ascending.
    pub fn settings(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.entries.keys().filter_map(|k| k.setting).collect();
        s.into_iter().collect()
    }

    /// Largest deviation from the scenario's sum rule; `expected` is the
    /// target sum (`None` means the identity).
    pub fn completeness_defect(&self, expected: Option<&CMatrix>) -> f64 {
        let n = self.shape.total_dim();
        let id = CMatrix::identity(n);
        let target = expected.unwrap_or(&id);
        let settings = self.settings();
        if settings.is_empty() {
            self.sum(None).max_abs_diff(target)
        } else {
            settings.iter().map(|&y| self.sum(Some(y)).max_abs_diff(target)).fold(0.0, f64::max)
        }
    }

    /// Predicted probability table `Tr[M̃ (⊗ψ)]` for every outcome and input tuple.
    pub fn forward(&self, ensembles: &[&InputEnsemble]) -> Result<ProbTable> {
        let dims = self.primed_dims();
        if ensembles.len() != dims.len() {
            return arg(format!("{} ensembles for {} primed registers", ensembles.len(), dims.len()));
        }
        for (e, &d) in ensembles.iter().zip(dims) {
            if e.dim() != d {
                return arg(format!("ensemble of dimension {} for a register of dimension {d}", e.dim()));
            }
        }
        let projectors: Vec<Vec<CMatrix>> = ensembles
            .iter()
            .map(|e| e.states().iter().map(|s| s.projector().into_matrix()).collect())
            .collect();
        let counts: Vec<usize> = ensembles.iter().map(|e| e.len()).collect();
        let mut table = ProbTable::default();
        for (key, op) in &self.entries {
            for inputs in tuples(&counts) {
                let rho = inputs
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| projectors[i][x].clone())
                    .reduce(|a, b| a.kron(&b))
                    .expect("at least one party");
                let p = op.matrix().trace_product(&rho).re;
                table.insert(ProbKey { outcomes: key.outcomes.clone(), inputs, setting: key.setting }, p);
            }
        }
        Ok(table)
    }
}

/// Index of one probability `p(outcomes | inputs, setting)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProbKey {
    pub outcomes: Vec<usize>,
    pub inputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<usize>,
}

/// Observed or simulated joint probabilities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbTable {
    entries: BTreeMap<ProbKey, f64>,
}

impl ProbTable {
    pub fn insert(&mut self, key: ProbKey, p: f64) {
        self.entries.insert(key, p);
    }

    pub fn get(&self, key: &ProbKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    /// `p(outcomes | inputs)` without a setting.
    pub fn p(&self, outcomes: &[usize], inputs: &[usize]) -> Option<f64> {
        self.get(&ProbKey { outcomes: outcomes.to_vec(), inputs: inputs.to_vec(), setting: None })
    }

    /// `p(outcomes | inputs, setting)`.
    pub fn p_setting(&self, outcomes: &[usize], inputs: &[usize], setting: usize) -> Option<f64> {
        self.get(&ProbKey { outcomes: outcomes.to_vec(), inputs: inputs.to_vec(), setting: Some(setting) })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProbKey, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum over outcomes for each (inputs, setting) pair.
    pub fn normalization(&self) -> BTreeMap<(Vec<usize>, Option<usize>), f64> {
        let mut out = BTreeMap::new();
        for (k, p) in self.iter() {
            *out.entry((k.inputs.clone(), k.setting)).or_insert(0.0) += p;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, p) in self.iter() {
            let q = other.get(k).unwrap_or(f64::NAN);
            worst = worst.max((p - q).abs());
            if q.is_nan() {
                return f64::INFINITY;
            }
        }
        if other.len() != self.len() {
            return f64::INFINITY;
        }
        worst
    }
}

/// Every tuple in `0..counts[0] × 0..counts[1] × …`, last index fastest.
pub(crate) fn tuples(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut f| {
            let mut t = vec![0; counts.len()];
            for i in (0..counts.len()).rev() {
                t[i] = f % counts[i];
                f /= counts[i];
            }
            t
        })
        .collect()
}

/// A party's measurement factor on (input, share) registers.
#[derive(Clone, Copy)]
struct Factor<'a> {
    m: &'a CMatrix,
    primed: usize,
    shared: usize,
    slot: InputSlot,
}

impl Factor<'_> {
    #[inline]
    fn at(&self, p: usize, s: usize, p2: usize, s2: usize) -> c64 {
        match self.slot {
            InputSlot::First => self.m[(p * self.shared + s, p2 * self.shared + s2)],
            InputSlot::Last => self.m[(s * self.primed + p, s2 * self.primed + p2)],
        }
    }
}

/// `Tr_S[(⊗_i F_i)(1_P ⊗ ρ_S)]` over the shared registers, kept on the primed ones.
fn contract(factors: &[Factor<'_>], rho: &CMatrix) -> CMatrix {
    let pdims: Vec<usize> = factors.iter().map(|f| f.primed).collect();
    let sdims: Vec<usize> = factors.iter().map(|f| f.shared).collect();
    let pt = tuples(&pdims);
    let st = tuples(&sdims);
    let dp = pt.len();
    let mut out = CMatrix::zeros(dp, dp);
    for (i, pi) in pt.iter().enumerate() {
        for (j, pj) in pt.iter().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for (a, sa) in st.iter().enumerate() {
                for (b, sb) in st.iter().enumerate() {
                    let r = rho[(b, a)];
                    if r == c64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut prod = r;
                    for (k, f) in factors.iter().enumerate() {
                        prod *= f.at(pi[k], sa[k], pj[k], sb[k]);
                        if prod == c64::new(0.0, 0.0) {
                            break;
                        }
                    }
                    acc += prod;
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn split_dims(p: &Povm, slot: InputSlot, what: &str) -> Result<(usize, usize)> {
    let dims = p.dims();
    if dims.len() != 2 {
        return arg(format!("{what} must act on two registers, got {:?}", dims));
    }
    Ok(match slot {
        InputSlot::First => (dims[0], dims[1]),
        InputSlot::Last => (dims[1], dims[0]),
    })
}

/// `M̃_{a,b} = Tr_{AB}[(M_a ⊗ M_b)(1_{A′} ⊗ ρ ⊗ 1_{B′})]` with `M_a` on A′⊗A and `M_b` on B⊗B′.
pub fn effective_joint(rho: &DensityMatrix, povm_a: &Povm, povm_b: &Povm) -> Result<EffectiveSet> {
    let set = effective_multipartite(rho, &[(povm_a, InputSlot::First), (povm_b, InputSlot::Last)])?;
    Ok(EffectiveSet { scenario: Scenario::Joint, ..set })
}

/// Effective measurements for `n` parties, each holding one register of `ρ`.
pub fn effective_multipartite(rho: &DensityMatrix, parties: &[(&Povm, InputSlot)]) -> Result<EffectiveSet> {
    let sdims = rho.dims();
    if parties.len() != sdims.len() {
        return arg(format!("{} measurements for a {}-partite state", parties.len(), sdims.len()));
    }
    let mut pdims = Vec::with_capacity(parties.len());
    for (i, (p, slot)) in parties.iter().enumerate() {
        let (dp, ds) = split_dims(p, *slot, "party measurement")?;
        if ds != sdims[i] {
            return arg(format!("party {i} measures a share of dimension {ds}, state has {}", sdims[i]));
        }
        pdims.push(dp);
    }
    let shape = SystemShape::new(pdims.clone())?;
    crate::tensor::check_cap(shape.total_dim() * rho.dim())?;
    let counts: Vec<usize> = parties.iter().map(|(p, _)| p.len()).collect();
    let mut entries = BTreeMap::new();
    for outcomes in tuples(&counts) {
        let factors: Vec<Factor<'_>> = parties
            .iter()
            .zip(&outcomes)
            .enumerate()
            .map(|(i, ((p, slot), &o))| Factor { m: p.effect(o), primed: pdims[i], shared: sdims[i], slot: *slot })
            .collect();
        let m = contract(&factors, rho.matrix());
        entries.insert(OutcomeKey::new(outcomes), Operator::hermitian(m.hermitian_part(), shape.clone())?);
    }
    EffectiveSet::new(Scenario::Multipartite, shape, entries)
}

/// `M̃_{a,b|y} = Tr_{AB}[(M_a ⊗ M_{b|y})(1_{A′} ⊗ ρ)]` with Bob's settings on B alone.
pub fn effective_qc(rho: &DensityMatrix, povm_a: &Povm, bob_settings: &[Povm]) -> Result<EffectiveSet> {
    let sdims = rho.dims();
    if sdims.len() != 2 {
        return arg("quantum-classical scenario needs a bipartite state");
    }
    let (dp, ds) = split_dims(povm_a, InputSlot::First, "Alice's measurement")?;
    if ds != sdims[0] {
        return arg("Alice's measurement does not match her share");
    }
    let shape = SystemShape::new(vec![dp])?;
    let mut entries = BTreeMap::new();
    for (y, bob) in bob_settings.iter().enumerate() {
        if bob.dims() != [sdims[1]] {
            return arg(format!("Bob's setting {y} does not act on his share alone"));
        }
        for a in 0..povm_a.len() {
            for b in 0..bob.len() {
                let fa = Factor { m: povm_a.effect(a), primed: dp, shared: ds, slot: InputSlot::First };
                let fb = Factor { m: bob.effect(b), primed: 1, shared: sdims[1], slot: InputSlot::First };
                let m = contract(&[fa, fb], rho.matrix());
                entries.insert(OutcomeKey::with_setting(vec![a, b], y), Operator::hermitian(m.hermitian_part(), shape.clone())?);
            }
        }
    }
    EffectiveSet::new(Scenario::Qc, shape, entries)
}

/// `M̃_a = Tr_A[(M_a ⊗ 1_B)(1_{A′} ⊗ ρ)]`, an operator on A′⊗B.
pub fn effective_teleport(rho: &DensityMatrix, povm_a: &Povm) -> Result<EffectiveSet> {
    let sdims = rho.dims();
    if sdims.len() != 2 {
        return arg("teleportation needs a bipartite state");
    }
    let (dp, ds) = split_dims(povm_a, InputSlot::First, "Alice's measurement")?;
    if ds != sdims[0] {
        return arg("Alice's measurement does not match her share");
    }
    let db = sdims[1];
    let shape = SystemShape::new(vec![dp, db])?;
    let rm = rho.matrix();
    let mut entries = BTreeMap::new();
    for a in 0..povm_a.len() {
        let m = povm_a.effect(a);
        let mut out = CMatrix::zeros(dp * db, dp * db);
        for p in 0..dp {
            for b in 0..db {
                for p2 in 0..dp {
                    for b2 in 0..db {
                        let mut acc = c64::new(0.0, 0.0);
                        for al in 0..ds {
                            for al2 in 0..ds {
                                acc += m[(p * ds + al, p2 * ds + al2)] * rm[(al2 * db + b, al * db + b2)];
                            }
                        }
                        out[(p * db + b, p2 * db + b2)] = acc;
                    }
                }
            }
        }
        entries.insert(OutcomeKey::new(vec![a]), Operator::hermitian(out.hermitian_part(), shape.clone())?);
    }
    EffectiveSet::new(Scenario::Teleport, shape, entries)
}

/// The Bell measurement a party performs, with the Weyl shift on the shared register.
pub fn party_bsm(d: usize, slot: InputSlot, eta: f64) -> Result<Povm> {
    let p = if eta == 1.0 { bsm(d)? } else { noisy_bsm(d, eta)? };
    match slot {
        InputSlot::First => p.exchange_factors(),
        InputSlot::Last => Ok(p),
    }
}

/// Born-rule table computed on the full space `(⊗ψ_{x_i}) ⊗ ρ`, independent of [`EffectiveSet`].
pub fn born_table(rho: &DensityMatrix, parties: &[(&Povm, InputSlot)], ensembles: &[&InputEnsemble]) -> Result<ProbTable> {
    let n = parties.len();
    if ensembles.len() != n || rho.dims().len() != n {
        return arg("one measurement and one ensemble per party required");
    }
    // Registers of the global state: inputs 0..n, shares n..2n.
    let mut order = Vec::with_capacity(2 * n);
    for (i, (_, slot)) in parties.iter().enumerate() {
        match slot {
            InputSlot::First => order.extend([i, n + i]),
            InputSlot::Last => order.extend([n + i, i]),
        }
    }
    // `order[k]` is the global register of factor slot k; invert it for the permutation.
    let mut perm = vec![0; 2 * n];
    for (k, &g) in order.iter().enumerate() {
        perm[g] = k;
    }
    let counts: Vec<usize> = parties.iter().map(|(p, _)| p.len()).collect();
    let inputs_counts: Vec<usize> = ensembles.iter().map(|e| e.len()).collect();
    let mut ops = Vec::new();
    for outcomes in tuples(&counts) {
        let effs: Vec<&Operator> = parties.iter().zip(&outcomes).map(|((p, _), &o)| &p.effects()[o]).collect();
        let k = kron_all(&effs)?;
        ops.push((outcomes, permute_subsystems(&k, &perm)?.into_matrix()));
    }
    let mut table = ProbTable::default();
    for inputs in tuples(&inputs_counts) {
        let mut state = ensembles[0].states()[inputs[0]].projector();
        for i in 1..n {
            state = crate::tensor::kron(&state, &ensembles[i].states()[inputs[i]].projector())?;
        }
        let state = crate::tensor::kron(&state, rho.operator())?;
        for (outcomes, k) in &ops {
            let p = k.trace_product(state.matrix()).re;
            table.insert(ProbKey { outcomes: outcomes.clone(), inputs: inputs.clone(), setting: None }, p);
        }
    }
    Ok(table)
}

/// Born-rule table of the quantum-classical scenario on the full space.
pub fn born_table_qc(rho: &DensityMatrix, povm_a: &Povm, bob_settings: &[Povm], ensemble: &InputEnsemble) -> Result<ProbTable> {
    let mut table = ProbTable::default();
    for (x, psi) in ensemble.states().iter().enumerate() {
        let state = crate::tensor::kron(&psi.projector(), rho.operator())?;
        for (y, bob) in bob_settings.iter().enumerate() {
            for a in 0..povm_a.len() {
                for b in 0..bob.len() {
                    let k = povm_a.effect(a).kron(bob.effect(b));
                    let p = k.trace_product(state.matrix()).re;
                    table.insert(ProbKey { outcomes: vec![a, b], inputs: vec![x], setting: Some(y) }, p);
                }
            }
        }
    }
    Ok(table)
}

/// Diagnostics of a linear-inversion reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    /// Product of the per-party design-matrix condition numbers.
    pub condition_number: f64,
    /// Euclidean norm of the table residual after inversion.
    pub residual_norm: f64,
    /// Per-party rank of the design matrix.
    pub ranks: Vec<usize>,
}

/// Per-party linear map `T ↦ Σ_{jk} T[j,k] ψ_x[k,j]`, rows indexed by inputs.
pub(crate) fn design_matrix(e: &InputEnsemble) -> CMatrix {
    let d = e.dim();
    let mut m = CMatrix::zeros(e.len(), d * d);
    for (x, s) in e.states().iter().enumerate() {
        let a = s.amplitudes();
        for j in 0..d {
            for k in 0..d {
                // ψ[k,j] = a_k conj(a_j)
                m[(x, j * d + k)] = a[k] * a[j].conj();
            }
        }
    }
    m
}

/// Checks completeness of every ensemble and returns the design pseudo-inverses.
pub(crate) fn inverse_designs(ensembles: &[&InputEnsemble]) -> Result<(Vec<CMatrix>, Vec<CMatrix>, Vec<usize>, f64)> {
    let mut designs = Vec::new();
    let mut inverses = Vec::new();
    let mut ranks = Vec::new();
    let mut cond = 1.0;
    for (i, e) in ensembles.iter().enumerate() {
        let rep = is_tomographically_complete(e)?;
        if !rep.complete {
            return Err(Error::Precondition(format!(
                "input ensemble of party {i} is not tomographically complete: rank {} < {} (deficit {})",
                rep.rank,
                rep.required,
                rep.deficit()
            )));
        }
        let d = design_matrix(e);
        let p = pinv(&d, 1e-10)?;
        ranks.push(p.rank);
        cond *= p.condition;
        designs.push(d);
        inverses.push(p.matrix);
    }
    Ok((designs, inverses, ranks, cond))
}

/// Applies `m` along mode `k` of a tensor with the given mode sizes.
pub(crate) fn mode_product(t: &[c64], sizes: &[usize], k: usize, m: &CMatrix) -> (Vec<c64>, Vec<usize>) {
    assert_eq!(m.cols(), sizes[k]);
    let outer: usize = sizes[..k].iter().product();
    let inner: usize = sizes[k + 1..].iter().product();
    let mut new_sizes = sizes.to_vec();
    new_sizes[k] = m.rows();
    let mut out = vec![c64::new(0.0, 0.0); outer * m.rows() * inner];
    for o in 0..outer {
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let w = m[(r, c)];
                if w == c64::new(0.0, 0.0) {
                    continue;
                }
                let src = (o * sizes[k] + c) * inner;
                let dst = (o * m.rows() + r) * inner;
                for i in 0..inner {
                    out[dst + i] += w * t[src + i];
                }
            }
        }
    }
    (out, new_sizes)
}

/// Linear inversion of a probability table into effective measurements.
///
/// Each party's ensemble must be tomographically complete; the Moore–Penrose
/// pseudo-inverse (cutoff `1e-10·σ_max`) handles over-complete ensembles.
pub fn reconstruct(
    table: &ProbTable,
    ensembles: &[&InputEnsemble],
    scenario: Scenario,
) -> Result<(EffectiveSet, ReconstructionReport)> {
    if ensembles.is_empty() {
        return Err(Error::Precondition("no input ensembles given".into()));
    }
    let (designs, inverses, ranks, cond) = inverse_designs(ensembles)?;
    let n = ensembles.len();
    let dims: Vec<usize> = ensembles.iter().map(|e| e.dim()).collect();
    let counts: Vec<usize> = ensembles.iter().map(|e| e.len()).collect();
    let input_tuples = tuples(&counts);

    let keys: BTreeSet<OutcomeKey> = table
        .iter()
        .map(|(k, _)| OutcomeKey { outcomes: k.outcomes.clone(), setting: k.setting })
        .collect();
    if keys.is_empty() {
        return Err(Error::Data("empty probability table".into()));
    }
    let shape = SystemShape::new(dims.clone())?;
    let mut entries = BTreeMap::new();
    let mut residual_sq = 0.0;
    for key in keys {
        let mut data = Vec::with_capacity(input_tuples.len());
        for inputs in &input_tuples {
            if inputs.len() != n {
                return arg("input tuple length differs from party count");
            }
            let pk = ProbKey { outcomes: key.outcomes.clone(), inputs: inputs.clone(), setting: key.setting };
            let p = table.get(&pk).ok_or_else(|| {
                Error::Data(format!("table lacks p(outcomes {:?} | inputs {:?}, setting {:?})", key.outcomes, inputs, key.setting))
            })?;
            data.push(c64::new(p, 0.0));
        }
        // Realigned tensor T[(j1,k1),(j2,k2),…] = M̃[(j1 j2 …),(k1 k2 …)].
        let mut t = data.clone();
        let mut sizes = counts.clone();
        for k in 0..n {
            (t, sizes) = mode_product(&t, &sizes, k, &inverses[k]);
        }
        let mut back = t.clone();
        let mut bsizes = sizes.clone();
        for k in 0..n {
            (back, bsizes) = mode_product(&back, &bsizes, k, &designs[k]);
        }
        residual_sq += back.iter().zip(&data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();

        let total: usize = dims.iter().product();
        let mut m = CMatrix::zeros(total, total);
        let pair_counts: Vec<usize> = dims.iter().map(|d| d * d).collect();
        for (flat, pairs) in tuples(&pair_counts).into_iter().enumerate() {
            let mut row = 0;
            let mut col = 0;
            for (i, &pr) in pairs.iter().enumerate() {
                row = row * dims[i] + pr / dims[i];
                col = col * dims[i] + pr % dims[i];
            }
            m[(row, col)] = t[flat];
        }
        let herm = m.hermitian_part();
        if m.max_abs_diff(&herm) > 1e-6 {
            return Err(Error::Data(format!(
                "reconstructed operator for outcomes {:?} is far from Hermitian; the table is inconsistent",
                key.outcomes
            )));
        }
        entries.insert(key, Operator::hermitian(herm, shape.clone())?);
    }
    let set = EffectiveSet::new(scenario, shape, entries)?;
    Ok((set, ReconstructionReport { condition_number: cond, residual_norm: residual_sq.sqrt(), ranks }))
}

/// Verifies `Tr_B[(M^{AB} ⊗ 1_C)(1_A ⊗ φ⁺_{BC})] = (1/d)(M^{AC})^{T_C}` on one operator; returns the max deviation.
pub fn transpose_identity_defect(m: &CMatrix, da: usize, d: usize) -> Result<f64> {
    let phi = crate::qobjects::maximally_entangled(d)?.projector();
    let lhs_full = m.kron(&CMatrix::identity(d)).matmul(&CMatrix::identity(da).kron(phi.matrix()));
    let op = Operator::new(lhs_full, SystemShape::new(vec![da, d, d])?)?;
    let lhs = crate::tensor::partial_trace(&op, &[0, 2])?;
    let mac = Operator::new(m.clone(), SystemShape::new(vec![da, d])?)?;
    let rhs = crate::tensor::partial_transpose(&mac, 1)?.scale_real(1.0 / d as f64);
    Ok(lhs.matrix().max_abs_diff(rhs.matrix()))
}
