//! Linear repeater chains: simulation by entanglement swapping and a
//! per-link certification plan.

use crate::effective::{party_bsm, InputSlot};
use crate::error::{arg, Error, Result};
use crate::qobjects::{correcting_unitary, isotropic_state, maximally_entangled, noisy_bsm, r, DensityMatrix, InputEnsemble, Povm};
use crate::telecert::{fidelity_lower_bound_with, teleport, FidelityBound};
use crate::sdp::SolverOptions;
use crate::tensor::{check_cap, partial_trace, SystemShape};
use crate::{CMatrix, Operator};
use serde::{Deserialize, Serialize};

/// State emitted by one source of the chain.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceState {
    /// `p·φ⁺ + (1−p)·I/d²`.
    Isotropic(f64),
    /// An explicit two-qudit state.
    Explicit(DensityMatrix),
}

impl SourceState {
    fn density(&self, d: usize) -> Result<DensityMatrix> {
        match self {
            Self::Isotropic(p) => isotropic_state(d, *p),
            Self::Explicit(rho) => {
                if rho.dims() != [d, d] {
                    return arg(format!("source state on {:?} in a chain of local dimension {d}", rho.dims()));
                }
                Ok(rho.clone())
            }
        }
    }
}

/// Sources in order from the first node to the last, with the Bell
/// measurement visibility of every intermediate node.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    d: usize,
    sources: Vec<SourceState>,
    visibilities: Vec<f64>,
    first_trusted_inputs: bool,
    last_trusted_measurements: bool,
}

impl ChainSpec {
    pub fn new(
        d: usize,
        sources: Vec<SourceState>,
        visibilities: Vec<f64>,
        first_trusted_inputs: bool,
        last_trusted_measurements: bool,
    ) -> Result<Self> {
        if d < 2 {
            return arg(format!("local dimension {d} is below 2"));
        }
        if sources.is_empty() {
            return arg("a chain needs at least one source");
        }
        if visibilities.len() + 1 != sources.len() {
            return arg(format!(
                "{} sources need {} intermediate visibilities, got {}",
                sources.len(),
                sources.len() - 1,
                visibilities.len()
            ));
        }
        for (i, &v) in visibilities.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return arg(format!("visibility {v} of node {} outside [0,1]", i + 1));
            }
        }
        for s in &sources {
            s.density(d)?;
        }
        Ok(Self { d, sources, visibilities, first_trusted_inputs, last_trusted_measurements })
    }

    /// `n` copies of `isotropic(d, p)` joined by measurements of visibility `eta`.
    pub fn uniform(d: usize, n: usize, p: f64, eta: f64) -> Result<Self> {
        Self::new(d, vec![SourceState::Isotropic(p); n], vec![eta; n.saturating_sub(1)], true, true)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[SourceState] {
        &self.sources
    }

    pub fn visibilities(&self) -> &[f64] {
        &self.visibilities
    }

    pub fn first_trusted_inputs(&self) -> bool {
        self.first_trusted_inputs
    }

    pub fn last_trusted_measurements(&self) -> bool {
        self.last_trusted_measurements
    }
}

/// One Bell measurement on the middle registers of `ρ_AB ⊗ ρ_CD`, corrected by
/// `U_m` on D and averaged over outcomes.
pub fn swap_once(rho_ab: &DensityMatrix, rho_cd: &DensityMatrix, bsm: &Povm) -> Result<DensityMatrix> {
    let (l, rr) = (rho_ab.dims(), rho_cd.dims());
    if l.len() != 2 || rr.len() != 2 {
        return arg("swapping needs two bipartite states");
    }
    if bsm.dims() != [l[1], rr[0]] {
        return arg(format!("Bell measurement on {:?} does not fit middle registers {} and {}", bsm.dims(), l[1], rr[0]));
    }
    let d_out = rr[1];
    if bsm.len() > d_out * d_out {
        return arg(format!("{} outcomes exceed the {} correcting unitaries on the last register", bsm.len(), d_out * d_out));
    }
    let total = l[0] * l[1] * rr[0] * rr[1];
    check_cap(total)?;
    let shape = SystemShape::new(vec![l[0], l[1], rr[0], rr[1]])?;
    let joint = rho_ab.matrix().kron(rho_cd.matrix());
    let (ia, id) = (CMatrix::identity(l[0]), CMatrix::identity(d_out));
    let mut acc = CMatrix::zeros(l[0] * d_out, l[0] * d_out);
    for m in 0..bsm.len() {
        let lift = ia.kron(bsm.effect(m)).kron(&id);
        let branch = partial_trace(&Operator::new(lift.matmul(&joint), shape.clone())?, &[0, 3])?.into_matrix();
        let u = ia.kron(&correcting_unitary(m, d_out)?);
        acc.axpy(r(1.0), &u.matmul(&branch).matmul(&u.adjoint()));
    }
    DensityMatrix::new(Operator::hermitian(acc.hermitian_part(), SystemShape::new(vec![l[0], d_out])?)?)
}

/// End-to-end state of the chain: a left fold of [`swap_once`] with `noisy_bsm(d, η_i)`.
pub fn chain_state(spec: &ChainSpec) -> Result<DensityMatrix> {
    let d = spec.d();
    let mut acc = spec.sources[0].density(d)?;
    for (src, &eta) in spec.sources[1..].iter().zip(&spec.visibilities) {
        acc = swap_once(&acc, &src.density(d)?, &noisy_bsm(d, eta)?)?;
    }
    Ok(acc)
}

/// How a single source can be certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMethod {
    /// Trusted quantum inputs on one side, classical inputs on the other; computed here.
    QuantumClassical,
    /// One-sided device independence; label only.
    Steering,
    /// Fully device-independent; label only.
    StandardDi,
    /// Trusted quantum inputs on both sides; computed here.
    Mdi,
}

impl LinkMethod {
    /// Whether this crate computes the certificate.
    pub fn computed(self) -> bool {
        matches!(self, Self::QuantumClassical | Self::Mdi)
    }
}

/// How the whole chain can be certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndToEndMethod {
    TeleportationBound,
}

/// Method per source plus the end-to-end method, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificationPlan {
    pub links: Vec<LinkMethod>,
    pub end_to_end: Option<EndToEndMethod>,
}

/// First source by quantum-classical inputs, last by steering, the rest by
/// standard device-independent tests. A single source with both ends trusted
/// is certified directly with quantum inputs on both sides.
pub fn plan(spec: &ChainSpec) -> CertificationPlan {
    let n = spec.n_sources();
    let (first, last) = (spec.first_trusted_inputs(), spec.last_trusted_measurements());
    let links = (0..n)
        .map(|i| match (i == 0, i + 1 == n) {
            (true, true) if first && last => LinkMethod::Mdi,
            (true, _) if first => LinkMethod::QuantumClassical,
            (_, true) if last => LinkMethod::Steering,
            _ => LinkMethod::StandardDi,
        })
        .collect();
    let end_to_end = (first && last).then_some(EndToEndMethod::TeleportationBound);
    CertificationPlan { links, end_to_end }
}

/// Teleports the first node's inputs through the whole chain with an ideal
/// Bell measurement and bounds the end-to-end fidelity with `φ⁺`.
pub fn certify_chain_with(spec: &ChainSpec, ensemble: &InputEnsemble, opts: &SolverOptions<f64>) -> Result<FidelityBound> {
    if !spec.first_trusted_inputs() || !spec.last_trusted_measurements() {
        return Err(Error::Precondition(
            "end-to-end certification needs trusted inputs at the first node and trusted measurements at the last".into(),
        ));
    }
    if ensemble.dim() != spec.d() {
        return arg(format!("ensemble of dimension {} for a chain of dimension {}", ensemble.dim(), spec.d()));
    }
    let rho = chain_state(spec)?;
    let data = teleport(&rho, &party_bsm(spec.d(), InputSlot::First, 1.0)?, ensemble)?;
    fidelity_lower_bound_with(&data, opts)
}

/// [`certify_chain_with`] at the default solver options.
pub fn certify_chain(spec: &ChainSpec, ensemble: &InputEnsemble) -> Result<FidelityBound> {
    certify_chain_with(spec, ensemble, &SolverOptions::default())
}

/// `⟨φ⁺|ρ|φ⁺⟩` for the end-to-end state.
pub fn chain_fidelity(spec: &ChainSpec) -> Result<f64> {
    chain_state(spec)?.fidelity(&maximally_entangled(spec.d())?)
}
