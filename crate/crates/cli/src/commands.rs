use crate::error::{exit, CliError, CliResult};
use crate::formats::{
    parse, read_tagged, read_text, to_json, write_output, BoundFile, CertReportFile, ChainReportFile, ProbTableFile,
    ReferenceFile, RobustnessNote, TableScenario, TeleDataFile, TeleSummary, SCHEMA,
};
use crate::grid::parse_grid;
use crate::spec::{named_ensemble, ChainFile, ExperimentSpec, MeasurementSpec, Scenario};
use crate::sweep::{SweepRow, SWEEP_HEADER};
use qcert_core::effective::{born_table, born_table_qc, reconstruct, InputSlot, ProbKey, ProbTable, Scenario as EffScenario};
use qcert_core::network::{certify_chain_with, chain_fidelity, chain_state, plan};
use qcert_core::qobjects::{is_tomographically_complete, isotropic_state, maximally_entangled, InputEnsemble};
use qcert_core::sdp::{export_sdpa, SdpStatus, SolverOptions};
use qcert_core::selftest::{check_theorem1, qc_certify_table};
use qcert_core::telecert::{
    average_fidelity, build_real_sdp, fidelity_lower_bound_with, hhh_state_fidelity, teleport, FidelityBound,
    TeleportationData,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Visibility and fidelity of the published noisy-measurement example, and the
/// closed form `η² + (1−η²)/4` obtained here for the same visibility.
const ROBUSTNESS_NOTE: RobustnessNote =
    RobustnessNote { visibility: 0.95, quoted_fidelity: 0.893, closed_form_fidelity: 0.926875 };

fn solver_options(tol: Option<f64>) -> CliResult<SolverOptions<f64>> {
    let mut opts = SolverOptions::default();
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::input(format!("solver tolerance {t} must be positive")));
        }
        opts.tol = t;
    }
    Ok(opts)
}

/// Replaces each distribution of the table by the frequencies of `shots` draws.
pub fn sample_table(table: &ProbTable, shots: u64, seed: u64) -> CliResult<ProbTable> {
    if shots == 0 {
        return Err(CliError::input("--shots must be positive"));
    }
    let mut groups: BTreeMap<(Vec<usize>, Option<usize>), Vec<(&ProbKey, f64)>> = BTreeMap::new();
    for (k, p) in table.iter() {
        groups.entry((k.inputs.clone(), k.setting)).or_default().push((k, p.max(0.0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ProbTable::default();
    for entries in groups.values() {
        let mut left = shots;
        let mut mass: f64 = entries.iter().map(|e| e.1).sum();
        for (i, &(k, p)) in entries.iter().enumerate() {
            let count = if i + 1 == entries.len() || left == 0 {
                left
            } else if mass <= 0.0 {
                0
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).map_err(|e| CliError::input(format!("sampling failed: {e}")))?.sample(&mut rng)
            };
            left -= count;
            mass -= p;
            out.insert(k.clone(), count as f64 / shots as f64);
        }
    }
    Ok(out)
}

pub struct GenArgs {
    pub spec: PathBuf,
    pub out: Option<PathBuf>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

pub fn gen(args: &GenArgs) -> CliResult<u8> {
    let spec: ExperimentSpec = parse(&read_text(&args.spec)?, &args.spec.display().to_string())?;
    spec.check_schema()?;
    let shots = args.shots.or(spec.shots);
    let seed = args.seed.or(spec.seed).unwrap_or(0);
    let d = spec.d;
    let text = match spec.scenario {
        Scenario::Mdi | Scenario::Qc => {
            let rho = spec.state.density(d)?;
            let a = spec.alice.povm(d, InputSlot::First)?;
            let ea = spec.alice_ensemble()?;
            let (table, scenario, ensembles) = if spec.scenario == Scenario::Mdi {
                let b = spec.bob.povm(d, InputSlot::Last)?;
                let eb = spec.bob_ensemble()?;
                let t = born_table(&rho, &[(&a, InputSlot::First), (&b, InputSlot::Last)], &[&ea, &eb])?;
                (t, TableScenario::Mdi, vec![ea, eb])
            } else {
                (born_table_qc(&rho, &a, &spec.bob_settings()?, &ea)?, TableScenario::Qc, vec![ea])
            };
            let table = match shots {
                Some(n) => sample_table(&table, n, seed)?,
                None => table,
            };
            let refs: Vec<&InputEnsemble> = ensembles.iter().collect();
            to_json(&ProbTableFile::new(scenario, d, &refs, shots, &table)?)
        }
        Scenario::Tele | Scenario::Chain => {
            if shots.is_some() {
                return Err(CliError::input("sampled teleportation data is not supported; omit --shots"));
            }
            let rho = if spec.scenario == Scenario::Chain {
                let chain = spec.chain.as_ref().ok_or_else(|| CliError::input("scenario `chain` needs a `chain` field"))?;
                if chain.d != d {
                    return Err(CliError::input(format!("chain dimension {} differs from d = {d}", chain.d)));
                }
                chain_state(&chain.spec()?)?
            } else {
                spec.state.density(d)?
            };
            let a = spec.alice.povm(d, InputSlot::First)?;
            to_json(&TeleDataFile::new(&teleport(&rho, &a, &spec.alice_ensemble()?)?))
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(exit::PASS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertifyMode {
    Mdi,
    Qc,
}

pub struct CertifyArgs {
    pub mode: CertifyMode,
    pub data: PathBuf,
    pub reference: Option<PathBuf>,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

pub fn certify(args: &CertifyArgs) -> CliResult<u8> {
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(CliError::input(format!("tolerance {} must be non-negative", args.tol)));
    }
    let file: ProbTableFile = read_tagged(&args.data, ProbTableFile::KIND)?;
    let table = file.table()?;
    let (report, cond, note) = match args.mode {
        CertifyMode::Mdi => {
            if file.scenario != TableScenario::Mdi {
                return Err(CliError::input("certify mdi needs an mdi probability table"));
            }
            let ensembles = file.ensembles()?;
            if ensembles.len() != 2 {
                return Err(CliError::input(format!("mdi table needs two ensembles, found {}", ensembles.len())));
            }
            let reference = match &args.reference {
                Some(p) => read_tagged::<ReferenceFile>(p, ReferenceFile::KIND)?.state.to_state()?,
                None => maximally_entangled(file.d)?,
            };
            let (eff, rep) = reconstruct(&table, &[&ensembles[0], &ensembles[1]], EffScenario::Joint)?;
            let note = (file.d == 2).then_some(ROBUSTNESS_NOTE);
            (check_theorem1(&eff, &reference, args.tol)?, Some(rep.condition_number), note)
        }
        CertifyMode::Qc => {
            if file.scenario != TableScenario::Qc {
                return Err(CliError::input("certify qc needs a qc probability table"));
            }
            if args.reference.is_some() {
                return Err(CliError::input("certify qc has a fixed target; --reference is not accepted"));
            }
            (qc_certify_table(&table, args.tol)?, None, None)
        }
    };
    let pass = report.pass;
    let out = CertReportFile {
        schema: SCHEMA.into(),
        kind: CertReportFile::KIND.into(),
        report,
        reconstruction_condition: cond,
        robustness_note: note,
    };
    write_output(args.out.as_deref(), &to_json(&out))?;
    Ok(if pass { exit::PASS } else { exit::FAIL })
}

/// Synthetic teleportation experiment on an isotropic state.
pub struct Generator {
    pub d: usize,
    pub inputs: String,
    pub eta: f64,
}

impl Generator {
    pub fn data(&self, p: f64) -> CliResult<TeleportationData> {
        let rho = isotropic_state(self.d, p)?;
        let m = MeasurementSpec::Bsm { eta: self.eta }.povm(self.d, InputSlot::First)?;
        Ok(teleport(&rho, &m, &named_ensemble(&self.inputs, self.d)?)?)
    }
}

pub enum TeleSource {
    File(PathBuf),
    Generated(Generator, f64),
}

pub struct BoundArgs {
    pub source: TeleSource,
    pub solver_tol: Option<f64>,
    pub export_sdpa: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn tele_summary(data: &TeleportationData) -> Option<TeleSummary> {
    let f = average_fidelity(data).ok()?;
    let h = hhh_state_fidelity(f, data.d());
    let complete = is_tomographically_complete(data.ensemble()).map(|r| r.complete).unwrap_or(false);
    Some(TeleSummary { average_fidelity: f, implied_state_fidelity: h.value, implied_clamped: h.clamped, ensemble_complete: complete })
}

fn solver_exit(b: &FidelityBound) -> u8 {
    if b.status == SdpStatus::Optimal {
        exit::PASS
    } else {
        exit::SOLVER
    }
}

pub fn tele_bound(args: &BoundArgs) -> CliResult<u8> {
    let opts = solver_options(args.solver_tol)?;
    let data = match &args.source {
        TeleSource::File(p) => read_tagged::<TeleDataFile>(p, TeleDataFile::KIND)?.data()?,
        TeleSource::Generated(g, p) => g.data(*p)?,
    };
    if let Some(path) = &args.export_sdpa {
        write_output(Some(path), &export_sdpa(&build_real_sdp(&data)?))?;
    }
    let bound = fidelity_lower_bound_with(&data, &opts)?;
    let code = solver_exit(&bound);
    let out = BoundFile { schema: SCHEMA.into(), kind: BoundFile::KIND.into(), bound, teleportation: tele_summary(&data) };
    write_output(args.out.as_deref(), &to_json(&out))?;
    Ok(code)
}

pub struct SweepArgs {
    pub generator: Generator,
    pub grid: String,
    pub solver_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

/// One bound per grid point, in grid order.
pub fn sweep_rows(generator: &Generator, grid: &[f64], opts: &SolverOptions<f64>) -> CliResult<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&p| {
            let b = fidelity_lower_bound_with(&generator.data(p)?, opts)?;
            Ok(SweepRow { p, bound: b.value, status: b.status, gap: b.gap })
        })
        .collect()
}

pub fn tele_sweep(args: &SweepArgs) -> CliResult<u8> {
    let opts = solver_options(args.solver_tol)?;
    let grid = parse_grid(&args.grid)?;
    for &p in &grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::input(format!("grid point {p} outside [0,1]")));
        }
    }
    // Validate the generator once before spawning the sweep.
    args.generator.data(grid[0])?;
    let rows = sweep_rows(&args.generator, &grid, &opts)?;
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)?;
    Ok(if rows.iter().all(|r| r.status == SdpStatus::Optimal) { exit::PASS } else { exit::SOLVER })
}

pub struct ChainArgs {
    pub spec: PathBuf,
    pub plan_only: bool,
    pub bound: bool,
    pub solver_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn read_chain(path: &Path) -> CliResult<ChainFile> {
    read_tagged(path, ChainFile::KIND)
}

pub fn chain(args: &ChainArgs) -> CliResult<u8> {
    if args.plan_only && args.bound {
        return Err(CliError::input("--plan-only and --bound are mutually exclusive"));
    }
    let opts = solver_options(args.solver_tol)?;
    let file = read_chain(&args.spec)?;
    let spec = file.spec()?;
    let plan = plan(&spec);
    if args.bound && plan.end_to_end.is_none() {
        return Err(CliError::input("--bound needs trusted inputs at the first node and trusted measurements at the last"));
    }
    let bound = if !args.plan_only && plan.end_to_end.is_some() {
        Some(certify_chain_with(&spec, &file.ensemble()?, &opts)?)
    } else {
        None
    };
    let code = bound.as_ref().map_or(exit::PASS, solver_exit);
    let out = ChainReportFile {
        schema: SCHEMA.into(),
        kind: ChainReportFile::KIND.into(),
        plan,
        simulated_fidelity: chain_fidelity(&spec)?,
        bound,
    };
    write_output(args.out.as_deref(), &to_json(&out))?;
    Ok(code)
}
