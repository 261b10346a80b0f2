//! On-disk formats. Every file is JSON tagged with `"schema": "qcert/v1"` and a
//! `"kind"`; complex numbers are `[re, im]` pairs and operators are
//! `{"dims": [...], "data": [[...], ...]}` with rows in basis order.

use crate::error::{CliError, CliResult};
use qcert_core::effective::{ProbKey, ProbTable};
use qcert_core::network::CertificationPlan;
use qcert_core::qobjects::{DensityMatrix, InputEnsemble, PureState};
use qcert_core::selftest::CertReport;
use qcert_core::telecert::{FidelityBound, TeleportationData};
use qcert_core::tensor::SystemShape;
use qcert_core::{c64, CMatrix, Operator};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA: &str = "qcert/v1";

pub type JsonComplex = [f64; 2];

fn to_json_complex(z: c64) -> JsonComplex {
    [z.re, z.im]
}

fn from_json_complex(z: JsonComplex) -> c64 {
    c64::new(z[0], z[1])
}

/// Dense operator with subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonMatrix {
    pub dims: Vec<usize>,
    pub data: Vec<Vec<JsonComplex>>,
}

impl JsonMatrix {
    pub fn from_matrix(m: &CMatrix, dims: &[usize]) -> Self {
        let data = (0..m.rows()).map(|i| (0..m.cols()).map(|j| to_json_complex(m[(i, j)])).collect()).collect();
        Self { dims: dims.to_vec(), data }
    }

    pub fn from_operator(op: &Operator) -> Self {
        Self::from_matrix(op.matrix(), op.dims())
    }

    pub fn to_matrix(&self) -> CliResult<CMatrix> {
        let n: usize = self.dims.iter().product();
        if self.data.len() != n || self.data.iter().any(|row| row.len() != n) {
            return Err(CliError::input(format!("matrix with dims {:?} must be {n}×{n}", self.dims)));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| from_json_complex(self.data[i][j])))
    }

    pub fn to_operator(&self) -> CliResult<Operator> {
        Ok(Operator::new(self.to_matrix()?, SystemShape::new(self.dims.clone())?)?)
    }

    pub fn to_density(&self) -> CliResult<DensityMatrix> {
        Ok(DensityMatrix::new(self.to_operator()?)?)
    }
}

/// Pure state as an amplitude list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonState {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<JsonComplex>,
}

impl JsonState {
    pub fn from_state(psi: &PureState) -> Self {
        Self { dims: psi.shape().dims().to_vec(), amplitudes: psi.amplitudes().iter().map(|&z| to_json_complex(z)).collect() }
    }

    pub fn to_state(&self) -> CliResult<PureState> {
        let amps = self.amplitudes.iter().map(|&z| from_json_complex(z)).collect();
        Ok(PureState::normalized(amps, SystemShape::new(self.dims.clone())?)?)
    }
}

/// Labelled input states of one party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonEnsemble {
    pub dim: usize,
    pub labels: Vec<String>,
    pub states: Vec<Vec<JsonComplex>>,
}

impl JsonEnsemble {
    pub fn from_ensemble(e: &InputEnsemble) -> Self {
        Self {
            dim: e.dim(),
            labels: e.labels().to_vec(),
            states: e.states().iter().map(|s| s.amplitudes().iter().map(|&z| to_json_complex(z)).collect()).collect(),
        }
    }

    pub fn to_ensemble(&self) -> CliResult<InputEnsemble> {
        if self.states.iter().any(|s| s.len() != self.dim) {
            return Err(CliError::input(format!("every input state must have {} amplitudes", self.dim)));
        }
        let vecs = self.states.iter().map(|s| s.iter().map(|&z| from_json_complex(z)).collect()).collect();
        Ok(InputEnsemble::from_labelled_vectors(vecs, self.labels.clone())?)
    }
}

/// Which table layout a probability file uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableScenario {
    /// `p(a,b|ψ_x,ψ_y)` with an ensemble per party.
    Mdi,
    /// `p(a,b|ψ_x,y)` with Alice's ensemble and Bob's classical setting `y`.
    Qc,
}

/// One probability record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub a: usize,
    pub b: usize,
    pub x: usize,
    pub y: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbTableFile {
    pub schema: String,
    pub kind: String,
    pub scenario: TableScenario,
    pub d: usize,
    pub ensembles: Vec<JsonEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    pub records: Vec<Record>,
}

impl ProbTableFile {
    pub const KIND: &'static str = "prob_table";

    pub fn new(scenario: TableScenario, d: usize, ensembles: &[&InputEnsemble], shots: Option<u64>, table: &ProbTable) -> CliResult<Self> {
        let records = table
            .iter()
            .map(|(k, p)| match (scenario, k.outcomes.as_slice(), k.inputs.as_slice(), k.setting) {
                (TableScenario::Mdi, &[a, b], &[x, y], None) => Ok(Record { a, b, x, y, p }),
                (TableScenario::Qc, &[a, b], &[x], Some(y)) => Ok(Record { a, b, x, y, p }),
                _ => Err(CliError::input(format!("table entry {k:?} does not fit the {scenario:?} layout"))),
            })
            .collect::<CliResult<_>>()?;
        Ok(Self {
            schema: SCHEMA.into(),
            kind: Self::KIND.into(),
            scenario,
            d,
            ensembles: ensembles.iter().map(|e| JsonEnsemble::from_ensemble(e)).collect(),
            shots,
            records,
        })
    }

    pub fn table(&self) -> CliResult<ProbTable> {
        let mut t = ProbTable::default();
        for r in &self.records {
            if !(r.p.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&r.p)) {
                return Err(CliError::input(format!("probability {} at (a={},b={},x={},y={}) outside [0,1]", r.p, r.a, r.b, r.x, r.y)));
            }
            let key = match self.scenario {
                TableScenario::Mdi => ProbKey { outcomes: vec![r.a, r.b], inputs: vec![r.x, r.y], setting: None },
                TableScenario::Qc => ProbKey { outcomes: vec![r.a, r.b], inputs: vec![r.x], setting: Some(r.y) },
            };
            if t.get(&key).is_some() {
                return Err(CliError::input(format!("duplicate record (a={},b={},x={},y={})", r.a, r.b, r.x, r.y)));
            }
            t.insert(key, r.p);
        }
        Ok(t)
    }

    pub fn ensembles(&self) -> CliResult<Vec<InputEnsemble>> {
        self.ensembles.iter().map(JsonEnsemble::to_ensemble).collect()
    }
}

/// Bob's conditional state for one outcome and input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleRecord {
    pub a: usize,
    pub x: usize,
    pub state: JsonMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleDataFile {
    pub schema: String,
    pub kind: String,
    pub d: usize,
    pub n_outcomes: usize,
    pub ensemble: JsonEnsemble,
    pub states: Vec<TeleRecord>,
}

impl TeleDataFile {
    pub const KIND: &'static str = "teleportation_data";

    pub fn new(data: &TeleportationData) -> Self {
        Self {
            schema: SCHEMA.into(),
            kind: Self::KIND.into(),
            d: data.d(),
            n_outcomes: data.n_outcomes(),
            ensemble: JsonEnsemble::from_ensemble(data.ensemble()),
            states: data
                .states()
                .iter()
                .map(|(&(a, x), op)| TeleRecord { a, x, state: JsonMatrix::from_operator(op) })
                .collect(),
        }
    }

    pub fn data(&self) -> CliResult<TeleportationData> {
        let ensemble = self.ensemble.to_ensemble()?;
        if ensemble.dim() != self.d {
            return Err(CliError::input(format!("ensemble dimension {} differs from d = {}", ensemble.dim(), self.d)));
        }
        let mut states = BTreeMap::new();
        for r in &self.states {
            if states.insert((r.a, r.x), r.state.to_operator()?).is_some() {
                return Err(CliError::input(format!("duplicate state for a={}, x={}", r.a, r.x)));
            }
        }
        Ok(TeleportationData::new(ensemble, self.n_outcomes, states)?)
    }
}

/// Target state of an MDI certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFile {
    pub schema: String,
    pub kind: String,
    pub state: JsonState,
}

impl ReferenceFile {
    pub const KIND: &'static str = "reference";
}

/// Published robustness figure kept next to the closed form for comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessNote {
    pub visibility: f64,
    pub quoted_fidelity: f64,
    pub closed_form_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertReportFile {
    pub schema: String,
    pub kind: String,
    pub report: CertReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_condition: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness_note: Option<RobustnessNote>,
}

impl CertReportFile {
    pub const KIND: &'static str = "cert_report";
}

/// Average teleportation fidelity and the state fidelity it implies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleSummary {
    pub average_fidelity: f64,
    pub implied_state_fidelity: f64,
    pub implied_clamped: bool,
    /// The implied value only holds for complete ensembles and a `d×d` shared state.
    pub ensemble_complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundFile {
    pub schema: String,
    pub kind: String,
    pub bound: FidelityBound,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teleportation: Option<TeleSummary>,
}

impl BoundFile {
    pub const KIND: &'static str = "fidelity_bound";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainReportFile {
    pub schema: String,
    pub kind: String,
    pub plan: CertificationPlan,
    /// `⟨φ⁺|ρ|φ⁺⟩` of the simulated end-to-end state.
    pub simulated_fidelity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<FidelityBound>,
}

impl ChainReportFile {
    pub const KIND: &'static str = "chain_report";
}

/// Parses JSON, reporting the failing field path and line.
pub fn parse<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::input(format!(
            "{what}: line {}, column {}, field `{}`: {inner}",
            inner.line(),
            inner.column(),
            e.path()
        ))
    })
}

/// Parses a tagged file and checks its schema and kind.
pub fn parse_tagged<T: DeserializeOwned>(text: &str, what: &str, kind: &str) -> CliResult<T> {
    #[derive(Deserialize)]
    struct Tag {
        schema: Option<String>,
        kind: Option<String>,
    }
    let tag: Tag = parse(text, what)?;
    match tag.schema.as_deref() {
        Some(SCHEMA) => {}
        Some(other) => return Err(CliError::input(format!("{what}: unsupported schema `{other}`, expected `{SCHEMA}`"))),
        None => return Err(CliError::input(format!("{what}: missing field `schema`"))),
    }
    if tag.kind.as_deref() != Some(kind) {
        return Err(CliError::input(format!("{what}: expected kind `{kind}`, found {:?}", tag.kind)));
    }
    parse(text, what)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_tagged<T: DeserializeOwned>(path: &Path, kind: &str) -> CliResult<T> {
    parse_tagged(&read_text(path)?, &path.display().to_string(), kind)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))
        }
        _ => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::input(format!("cannot write to stdout: {e}")))
        }
    }
}
