use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmrm_core::experiments::{
    preset_system, read_rows, rows_to_csv, run_experiment, summarize, summary_to_csv,
    write_atomically, ExperimentSpec, PresetSystem, SolverKind,
};
use qmrm_core::linalg::{condition_number, eigendecompose};
use qmrm_core::Error;

#[derive(Parser)]
#[command(
    name = "qmrm",
    version,
    about = "Iterative refinement over a simulated HHL solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-iteration rows as CSV.
    Run(RunArgs),
    /// Per-iteration mean and median of a results CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the preset systems.
    Presets,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON file with ExperimentSpec fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_system)]
    system: Option<PresetSystem>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    phase_qubits: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_system(s: &str) -> Result<PresetSystem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl RunArgs {
    fn into_spec(self) -> qmrm_core::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_json(&fs::read_to_string(path)?)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.system {
            spec.system = v.into();
        }
        if let Some(v) = self.solver {
            spec.solver = v;
        }
        if let Some(v) = self.shots {
            spec.n_shots = v;
        }
        if let Some(v) = self.phase_qubits {
            spec.phase_qubits = v;
        }
        if let Some(v) = self.iters {
            spec.iterations = v;
        }
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.base_seed = v;
        }
        if let Some(v) = self.eps {
            spec.epsilon = v;
        }
        if self.out.is_some() {
            spec.output_path = self.out;
        }
        Ok(spec)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> qmrm_core::Result<()> {
    match out {
        Some(path) => write_atomically(path, text),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn run(command: Command) -> qmrm_core::Result<()> {
    match command {
        Command::Run(args) => {
            let spec = args.into_spec()?;
            let rows = run_experiment(&spec)?;
            emit(spec.output_path.as_ref(), &rows_to_csv(&rows))
        }
        Command::Summarize { input, out } => {
            let rows = read_rows(fs::File::open(&input)?)?;
            emit(out.as_ref(), &summary_to_csv(&summarize(&rows)?))
        }
        Command::Presets => {
            let mut stdout = io::stdout().lock();
            for id in [PresetSystem::I, PresetSystem::II] {
                let sys = preset_system(id);
                let terms: Vec<String> = id.terms().iter().map(ToString::to_string).collect();
                let eig = eigendecompose(&sys.a)?;
                writeln!(stdout, "system {id}: A = {}", terms.join(" + "))?;
                writeln!(
                    stdout,
                    "  condition number {:.3}",
                    condition_number(&sys.a)?
                )?;
                writeln!(stdout, "  eigenvalues {:?}", eig.eigenvalues)?;
                let b: Vec<f64> = sys.b.iter().map(|z| z.re).collect();
                writeln!(stdout, "  b = {b:?}")?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
