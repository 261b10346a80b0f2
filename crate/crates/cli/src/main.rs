use clap::{Args, Parser, Subcommand, ValueEnum};
use qcert_cli::commands::{self, BoundArgs, CertifyArgs, CertifyMode, ChainArgs, GenArgs, Generator, SweepArgs, TeleSource};
use qcert_cli::{exit, CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

/// Self-testing with trusted quantum inputs.
#[derive(Parser)]
#[command(name = "qcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write its probability table or teleportation data.
    Gen {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace exact probabilities by the frequencies of N draws per input.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify a probability table against a reference state.
    Certify {
        #[arg(value_enum)]
        mode: Mode,
        data: PathBuf,
        /// Pure target state (MDI only); the maximally entangled state by default.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = qcert_core::selftest::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity lower bounds from teleportation experiments.
    #[command(subcommand)]
    Tele(Tele),
    /// Certification plan and end-to-end bound of a repeater chain.
    Chain {
        spec: PathBuf,
        /// Skip the end-to-end bound.
        #[arg(long)]
        plan_only: bool,
        /// Require the end-to-end bound.
        #[arg(long)]
        bound: bool,
        #[arg(long)]
        solver_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mdi,
    Qc,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    Isotropic,
}

#[derive(Args)]
struct GenFlags {
    #[arg(long, value_enum, default_value = "isotropic")]
    state: StateKind,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Named input ensemble: standard, pauli6, case1, case2.
    #[arg(long, default_value = "standard")]
    inputs: String,
    /// Visibility of Alice's Bell measurement.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

impl GenFlags {
    fn generator(&self) -> Generator {
        let StateKind::Isotropic = self.state;
        Generator { d: self.d, inputs: self.inputs.clone(), eta: self.eta }
    }
}

#[derive(Subcommand)]
enum Tele {
    /// Bound for one data set, read from --data or generated.
    Bound {
        #[arg(long, conflicts_with_all = ["p", "state", "d", "inputs", "eta"])]
        data: Option<PathBuf>,
        /// Isotropic weight of the generated state.
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        gen: GenFlags,
        #[arg(long)]
        solver_tol: Option<f64>,
        /// Also write the real-form program in SDPA format.
        #[arg(long)]
        export_sdpa: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounds over a grid of isotropic weights, as CSV.
    Sweep {
        #[command(flatten)]
        gen: GenFlags,
        /// start:stop:step, endpoints included.
        #[arg(long)]
        p_grid: String,
        #[arg(long)]
        solver_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Gen { spec, out, shots, seed } => commands::gen(&GenArgs { spec, out, shots, seed }),
        Command::Certify { mode, data, reference, tol, out } => {
            let mode = match mode {
                Mode::Mdi => CertifyMode::Mdi,
                Mode::Qc => CertifyMode::Qc,
            };
            commands::certify(&CertifyArgs { mode, data, reference, tol, out })
        }
        Command::Tele(Tele::Bound { data, p, gen, solver_tol, export_sdpa, out }) => {
            let source = match (data, p) {
                (Some(path), _) => TeleSource::File(path),
                (None, Some(p)) => TeleSource::Generated(gen.generator(), p),
                (None, None) => return Err(CliError::input("tele bound needs --data or --p")),
            };
            commands::tele_bound(&BoundArgs { source, solver_tol, export_sdpa, out })
        }
        Command::Tele(Tele::Sweep { gen, p_grid, solver_tol, out }) => {
            commands::tele_sweep(&SweepArgs { generator: gen.generator(), grid: p_grid, solver_tol, out })
        }
        Command::Chain { spec, plan_only, bound, solver_tol, out } => {
            commands::chain(&ChainArgs { spec, plan_only, bound, solver_tol, out })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT } else { exit::PASS });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
