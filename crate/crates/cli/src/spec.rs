//! Experiment and chain descriptions accepted by `gen` and `chain`.

use crate::error::{CliError, CliResult};
use crate::formats::{JsonEnsemble, JsonMatrix, JsonState, SCHEMA};
use qcert_core::effective::{party_bsm, InputSlot};
use qcert_core::network::{ChainSpec, SourceState};
use qcert_core::qobjects::{
    chsh_inputs, isotropic_state, maximally_entangled, observable_povm, pauli, pauli_six, qc_inputs, qutrit_case1,
    qutrit_case2, standard_complete_set, DensityMatrix, InputEnsemble, Povm,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Mdi,
    Qc,
    Tele,
    Chain,
}

/// A shared two-party state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    PhiPlus,
    Isotropic { p: f64 },
    Pure { state: JsonState },
    Explicit { matrix: JsonMatrix },
}

impl Default for StateSpec {
    fn default() -> Self {
        Self::PhiPlus
    }
}

impl StateSpec {
    pub fn density(&self, d: usize) -> CliResult<DensityMatrix> {
        let rho = match self {
            Self::PhiPlus => DensityMatrix::from_pure(&maximally_entangled(d)?),
            Self::Isotropic { p } => isotropic_state(d, *p)?,
            Self::Pure { state } => DensityMatrix::from_pure(&state.to_state()?),
            Self::Explicit { matrix } => matrix.to_density()?,
        };
        if rho.dims() != [d, d] {
            return Err(CliError::input(format!("state on {:?} does not match d = {d}", rho.dims())));
        }
        Ok(rho)
    }

    pub fn source(&self, d: usize) -> CliResult<SourceState> {
        Ok(match self {
            Self::Isotropic { p } => SourceState::Isotropic(*p),
            other => SourceState::Explicit(other.density(d)?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

fn one() -> f64 {
    1.0
}

/// A measurement device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementSpec {
    /// Bell measurement mixed with white noise at the given visibility.
    Bsm {
        #[serde(default = "one")]
        eta: f64,
    },
    /// Qubit Pauli measurement, outcome 0 for eigenvalue `+1`.
    Pauli { axis: Axis },
    /// Explicit effects in outcome order.
    Explicit { effects: Vec<JsonMatrix> },
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        Self::Bsm { eta: 1.0 }
    }
}

impl MeasurementSpec {
    /// The device of a party holding an input register in `slot`.
    pub fn povm(&self, d: usize, slot: InputSlot) -> CliResult<Povm> {
        match self {
            Self::Bsm { eta } => Ok(party_bsm(d, slot, *eta)?),
            Self::Pauli { axis } => {
                let [x, y, z] = pauli();
                let o = match axis {
                    Axis::X => x,
                    Axis::Y => y,
                    Axis::Z => z,
                };
                Ok(observable_povm(&o)?)
            }
            Self::Explicit { effects } => {
                let ops = effects.iter().map(JsonMatrix::to_operator).collect::<CliResult<Vec<_>>>()?;
                Ok(Povm::from_effects(ops)?)
            }
        }
    }
}

/// A named ensemble or explicit states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleRef {
    Named(String),
    Explicit(JsonEnsemble),
}

/// Resolves `standard`, `pauli6`, `qc`, `chsh`, `case1`, `case2`.
pub fn named_ensemble(name: &str, d: usize) -> CliResult<InputEnsemble> {
    let qubit_only = |e: InputEnsemble| {
        if d == 2 {
            Ok(e)
        } else {
            Err(CliError::input(format!("ensemble `{name}` is for qubits, d = {d}")))
        }
    };
    let qutrit_only = |e: InputEnsemble| {
        if d == 3 {
            Ok(e)
        } else {
            Err(CliError::input(format!("ensemble `{name}` is for qutrits, d = {d}")))
        }
    };
    match name {
        "standard" => Ok(standard_complete_set(d)?),
        "pauli6" => qubit_only(pauli_six()),
        "qc" => qubit_only(qc_inputs()),
        "chsh" => qubit_only(chsh_inputs()),
        "case1" => qutrit_only(qutrit_case1()),
        "case2" => qutrit_only(qutrit_case2()),
        other => Err(CliError::input(format!(
            "unknown ensemble `{other}` (expected standard, pauli6, qc, chsh, case1 or case2)"
        ))),
    }
}

impl EnsembleRef {
    pub fn resolve(&self, d: usize) -> CliResult<InputEnsemble> {
        let e = match self {
            Self::Named(name) => named_ensemble(name, d)?,
            Self::Explicit(e) => e.to_ensemble()?,
        };
        if e.dim() != d {
            return Err(CliError::input(format!("ensemble of dimension {} for d = {d}", e.dim())));
        }
        Ok(e)
    }
}

fn two() -> usize {
    2
}

fn yes() -> bool {
    true
}

/// Input of `qcert gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: String,
    pub scenario: Scenario,
    #[serde(default = "two")]
    pub d: usize,
    #[serde(default)]
    pub state: StateSpec,
    /// Alice's device, acting on her input then her share.
    #[serde(default)]
    pub alice: MeasurementSpec,
    /// Bob's device in the MDI scenario, acting on his share then his input.
    #[serde(default)]
    pub bob: MeasurementSpec,
    /// Bob's classical settings in the quantum-classical scenario; `z` then `x` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob_settings: Option<Vec<MeasurementSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleRef>,
    /// Bob's ensemble in the MDI scenario; Alice's by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_b: Option<EnsembleRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Repeater chain for the `chain` scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainFile>,
}

impl ExperimentSpec {
    pub fn check_schema(&self) -> CliResult<()> {
        if self.schema != SCHEMA {
            return Err(CliError::input(format!("unsupported schema `{}`, expected `{SCHEMA}`", self.schema)));
        }
        Ok(())
    }

    pub fn alice_ensemble(&self) -> CliResult<InputEnsemble> {
        let default = match self.scenario {
            Scenario::Qc => "qc",
            _ => "standard",
        };
        self.ensemble.clone().unwrap_or_else(|| EnsembleRef::Named(default.into())).resolve(self.d)
    }

    pub fn bob_ensemble(&self) -> CliResult<InputEnsemble> {
        match &self.ensemble_b {
            Some(e) => e.resolve(self.d),
            None => self.alice_ensemble(),
        }
    }

    pub fn bob_settings(&self) -> CliResult<Vec<Povm>> {
        let default = [MeasurementSpec::Pauli { axis: Axis::Z }, MeasurementSpec::Pauli { axis: Axis::X }];
        let specs = self.bob_settings.as_deref().unwrap_or(&default);
        specs.iter().map(|m| m.povm(self.d, InputSlot::Last)).collect()
    }
}

/// A repeater chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default = "two")]
    pub d: usize,
    pub sources: Vec<StateSpec>,
    /// Bell measurement visibility of each intermediate node; all ideal by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibilities: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub first_trusted_inputs: bool,
    #[serde(default = "yes")]
    pub last_trusted_measurements: bool,
    /// Inputs teleported from the first node; `standard` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleRef>,
}

impl ChainFile {
    pub const KIND: &'static str = "chain";

    pub fn spec(&self) -> CliResult<ChainSpec> {
        let sources = self.sources.iter().map(|s| s.source(self.d)).collect::<CliResult<Vec<_>>>()?;
        let vis = self.visibilities.clone().unwrap_or_else(|| vec![1.0; sources.len().saturating_sub(1)]);
        Ok(ChainSpec::new(self.d, sources, vis, self.first_trusted_inputs, self.last_trusted_measurements)?)
    }

    pub fn ensemble(&self) -> CliResult<InputEnsemble> {
        self.ensemble.clone().unwrap_or_else(|| EnsembleRef::Named("standard".into())).resolve(self.d)
    }
}
