//! Problem presets, multi-trial experiment driver, and CSV output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhl::{choose_parameters, HhlCircuit};
use crate::linalg::{pauli_tensor_build, residual, ComplexVector, LinearSystem, PauliTerm};
use crate::qsim::{RngSeed, ShotSampler};
use crate::refine::{qls1_adjust, qmrm_run_with_circuit, Mode, RefinementConfig, SolverVariant};

/// Exact solution shared by both preset systems.
pub const PRESET_SOLUTION: [f64; 4] = [-10.0, 1.0, 0.1, 0.01];

pub const CSV_HEADER: &str = "trial,iteration,residual_norm,relative_error,n_total,update_accepted";
pub const SUMMARY_HEADER: &str =
    "iteration,trials,n_total_mean,relative_error_mean,relative_error_median";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetSystem {
    /// `I⊗I + 2 Z⊗Z + 0.2 X⊗X`
    I,
    /// `Z⊗Z + 0.5 X⊗H`
    II,
}

impl PresetSystem {
    pub fn terms(self) -> Vec<PauliTerm> {
        let spec: &[(f64, &str)] = match self {
            PresetSystem::I => &[(1.0, "II"), (2.0, "ZZ"), (0.2, "XX")],
            PresetSystem::II => &[(1.0, "ZZ"), (0.5, "XH")],
        };
        spec.iter()
            .map(|&(c, ops)| PauliTerm::parse(c, ops).expect("preset terms are valid"))
            .collect()
    }
}

impl fmt::Display for PresetSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetSystem::I => "I",
            PresetSystem::II => "II",
        })
    }
}

impl FromStr for PresetSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(PresetSystem::I),
            "II" | "2" => Ok(PresetSystem::II),
            other => Err(Error::InvalidConfig(format!("unknown system '{other}'"))),
        }
    }
}

/// `A` from the preset's Pauli terms, `x = [-10, 1, 0.1, 0.01]`, `b = A x`.
pub fn preset_system(id: PresetSystem) -> LinearSystem {
    let a = pauli_tensor_build(&id.terms()).expect("preset terms are consistent");
    let x = ComplexVector::from_real(&PRESET_SOLUTION).expect("finite");
    LinearSystem::from_solution(a, x).expect("preset systems are invertible")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemSpec {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    Custom {
        terms: Vec<PauliTerm>,
        x: Vec<f64>,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<LinearSystem> {
        match self {
            SystemSpec::I => Ok(preset_system(PresetSystem::I)),
            SystemSpec::II => Ok(preset_system(PresetSystem::II)),
            SystemSpec::Custom { terms, x } => {
                let a = pauli_tensor_build(terms)?;
                LinearSystem::from_solution(a, ComplexVector::from_real(x)?)
            }
        }
    }
}

impl From<PresetSystem> for SystemSpec {
    fn from(p: PresetSystem) -> Self {
        match p {
            PresetSystem::I => SystemSpec::I,
            PresetSystem::II => SystemSpec::II,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "qls1")]
    Qls1,
    #[serde(rename = "qls2")]
    Qls2,
    #[serde(rename = "hhl-only")]
    HhlOnly,
    #[serde(rename = "ideal-qls1")]
    IdealQls1,
    #[serde(rename = "ideal-qls2")]
    IdealQls2,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Qls1,
        SolverKind::Qls2,
        SolverKind::HhlOnly,
        SolverKind::IdealQls1,
        SolverKind::IdealQls2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Qls1 => "qls1",
            SolverKind::Qls2 => "qls2",
            SolverKind::HhlOnly => "hhl-only",
            SolverKind::IdealQls1 => "ideal-qls1",
            SolverKind::IdealQls2 => "ideal-qls2",
        }
    }

    fn refinement(self) -> Option<(SolverVariant, Mode)> {
        match self {
            SolverKind::Qls1 => Some((SolverVariant::Qls1, Mode::Sampled)),
            SolverKind::Qls2 => Some((SolverVariant::QLS2, Mode::Sampled)),
            SolverKind::IdealQls1 => Some((SolverVariant::Qls1, Mode::Ideal)),
            SolverKind::IdealQls2 => Some((SolverVariant::QLS2, Mode::Ideal)),
            SolverKind::HhlOnly => None,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemSpec,
    pub solver: SolverKind,
    pub n_shots: u64,
    pub phase_qubits: usize,
    /// Refinement iterations, or shot batches for `hhl-only`.
    pub iterations: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub epsilon: f64,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            system: SystemSpec::I,
            solver: SolverKind::Qls1,
            n_shots: 10_000,
            phase_qubits: 6,
            iterations: 100,
            trials: 10,
            base_seed: 0,
            epsilon: 1e-16,
            output_path: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("{what} must be positive")));
        if self.trials == 0 {
            return bad("trials");
        }
        if self.n_shots == 0 {
            return bad("n_shots");
        }
        if self.iterations == 0 {
            return bad("iterations");
        }
        if self.phase_qubits < 2 {
            return Err(Error::InvalidConfig(
                "phase_qubits must be at least 2".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> RngSeed {
        RngSeed(self.base_seed ^ trial as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub iteration: usize,
    pub residual_norm: f64,
    pub relative_error: f64,
    pub n_total: u64,
    pub update_accepted: bool,
}

/// Runs every trial of `spec` and returns rows ordered by (trial, iteration).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let sys = spec.system.build()?;
    let params = choose_parameters(&sys.a, spec.phase_qubits)?;
    let circuit = HhlCircuit::new(&sys.a, params)?;

    let per_trial: Vec<Result<Vec<ResultRow>>> = match spec.solver.refinement() {
        Some((variant, mode)) => (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let config = RefinementConfig {
                    epsilon: spec.epsilon,
                    n_shots: spec.n_shots,
                    max_iterations: spec.iterations,
                    mode,
                    seed: spec.trial_seed(trial),
                    hhl_phase_qubits: spec.phase_qubits,
                };
                let trace = qmrm_run_with_circuit(&sys, &circuit, variant, &config)?;
                Ok(trace
                    .records
                    .iter()
                    .map(|r| ResultRow {
                        trial,
                        iteration: r.m,
                        residual_norm: r.residual_norm,
                        relative_error: r.relative_error.unwrap_or(f64::NAN),
                        n_total: r.n_total,
                        update_accepted: r.update_accepted,
                    })
                    .collect())
            })
            .collect(),
        None => {
            // one final state shared by every batch of every trial
            let state = circuit.final_state(&sys.b)?;
            let sampler = ShotSampler::new(&state);
            (0..spec.trials)
                .into_par_iter()
                .map(|trial| hhl_baseline_trial(&sys, &sampler, spec, trial))
                .collect()
        }
    };
    let mut rows = Vec::new();
    for trial_rows in per_trial {
        rows.extend(trial_rows?);
    }
    Ok(rows)
}

/// Accumulates shot batches and reconstructs `x̂ = c1 e^{i c2} d̃` against
/// `r = b` after each batch.
fn hhl_baseline_trial(
    sys: &LinearSystem,
    sampler: &ShotSampler,
    spec: &ExperimentSpec,
    trial: usize,
) -> Result<Vec<ResultRow>> {
    let seed = spec.trial_seed(trial);
    let dim = sys.dim();
    let mut cumulative = crate::qsim::MeasurementRecord::default();
    let mut rows = Vec::with_capacity(spec.iterations);
    for batch in 0..spec.iterations {
        cumulative.merge(&sampler.sample(spec.n_shots, seed.derive(batch as u64)));
        let (x_hat, accepted) = match cumulative.magnitude_estimate(dim) {
            Ok(d) => (qls1_adjust(&sys.a, &sys.b, &d)?, true),
            Err(_) => (ComplexVector::zeros(dim), false),
        };
        rows.push(ResultRow {
            trial,
            iteration: batch,
            residual_norm: residual(&sys.a, &sys.b, &x_hat)?.norm2(),
            relative_error: sys.relative_error(&x_hat).unwrap_or(f64::NAN),
            n_total: cumulative.n_shots,
            update_accepted: accepted,
        });
    }
    Ok(rows)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_rows<W: Write>(rows: &[ResultRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.iteration,
            fmt_float(r.residual_norm),
            fmt_float(r.relative_error),
            r.n_total,
            r.update_accepted
        )?;
    }
    out.flush()
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header '{}'",
            header.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Writes through a sibling temporary file so a failed write leaves no
/// partial output at `path`.
pub fn write_atomically(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub trials: usize,
    pub n_total_mean: f64,
    pub relative_error_mean: f64,
    pub relative_error_median: f64,
}

/// Per-iteration mean and median of the relative error across trials.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("nothing to summarize".into()));
    }
    let mut groups: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.iteration).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|(iteration, group)| {
            let n = group.len() as f64;
            let mut errors: Vec<f64> = group.iter().map(|r| r.relative_error).collect();
            errors.sort_by(f64::total_cmp);
            SummaryRow {
                iteration,
                trials: group.len(),
                n_total_mean: group.iter().map(|r| r.n_total as f64).sum::<f64>() / n,
                relative_error_mean: errors.iter().sum::<f64>() / n,
                relative_error_median: median_sorted(&errors),
            }
        })
        .collect())
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration,
            r.trials,
            fmt_float(r.n_total_mean),
            fmt_float(r.relative_error_mean),
            fmt_float(r.relative_error_median)
        ));
    }
    s
}
