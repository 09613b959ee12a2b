//! HHL on the statevector simulator.
//!
//! Pipeline: `|b⟩|0⟩_p|0⟩_a` → phase estimation with exact `e^{iAt}` →
//! eigenvalue-inversion rotation on the ancilla → inverse phase estimation →
//! post-selection (or Z-basis sampling) on ancilla 1, phase register 0.
//!
//! Phase-register values are decoded as signed (two's complement) fractions
//! so negative eigenvalues invert with the right sign.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, ComplexMatrix, ComplexVector, Eigendecomposition, C64};
use crate::qsim::{hadamard, QuantumState, QubitLayout, Register, RngSeed, ShotSampler};

/// Safety margin applied to the smallest representable eigenvalue magnitude.
pub const C_ROT_MARGIN: f64 = 0.99;

#[derive(Clone, Debug)]
pub struct HhlParameters {
    pub n_phase: usize,
    /// Time scale of `e^{iAt}`, radians per eigenvalue unit.
    pub t: f64,
    /// Rotation constant `C`.
    pub c_rot: f64,
    pub eigenbasis: Eigendecomposition,
}

/// Register value an eigenvalue lands on, before rounding.
pub fn eigenvalue_to_register_position(lambda: f64, t: f64, n_phase: usize) -> f64 {
    lambda * t * (1u64 << n_phase) as f64 / (2.0 * PI)
}

/// Picks `t` and `C` for a Hermitian, invertible `a`.
///
/// `t` places the largest eigenvalue magnitude on register position
/// `2^{p-1} - 1`, the largest positive value the signed decoding can hold,
/// so it lands on the grid and nothing wraps across the sign boundary.
/// `C` is `0.99` times the representable magnitude at or below `min|λ|`.
pub fn choose_parameters(a: &ComplexMatrix, n_phase: usize) -> Result<HhlParameters> {
    if n_phase < 2 {
        return Err(Error::InvalidConfig(
            "phase register needs at least 2 qubits for signed decoding".into(),
        ));
    }
    let eig = eigendecompose(a)?;
    let max = eig.max_abs_eigenvalue();
    let min = eig.min_abs_eigenvalue();
    if min <= crate::linalg::SINGULAR_TOL {
        return Err(Error::Singular);
    }
    let n = (1u64 << n_phase) as f64;
    let top = (1u64 << (n_phase - 1)) as f64 - 1.0;
    let t = 2.0 * PI * top / (n * max);
    HhlParameters::with_time_scale(eig, n_phase, t)
}

impl HhlParameters {
    /// Parameters for an explicit time scale; `C` is derived as in
    /// [`choose_parameters`].
    pub fn with_time_scale(eig: Eigendecomposition, n_phase: usize, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "time scale {t} must be positive"
            )));
        }
        let min = eig.min_abs_eigenvalue();
        if min <= crate::linalg::SINGULAR_TOL {
            return Err(Error::Singular);
        }
        let limit = PI * (1.0 - 1.0 / (1u64 << n_phase) as f64);
        let max = eig.max_abs_eigenvalue();
        if max * t > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "max |λ| t = {} exceeds the signed register range {limit}",
                max * t
            )));
        }
        let step = 2.0 * PI / ((1u64 << n_phase) as f64 * t);
        let below = (eigenvalue_to_register_position(min, t, n_phase) + 1e-9)
            .floor()
            .max(1.0);
        Ok(Self {
            n_phase,
            t,
            c_rot: C_ROT_MARGIN * step * below,
            eigenbasis: eig,
        })
    }

    pub fn register_dim(&self) -> usize {
        1 << self.n_phase
    }
}

/// Signed decoding of a phase-register value to an eigenvalue estimate:
/// `φ = k / 2^p`, `λ̃ = (2π/t) φ` for `φ < 1/2`, else `(2π/t)(φ - 1)`.
pub fn phase_register_to_eigenvalue(k: usize, params: &HhlParameters) -> f64 {
    let n = params.register_dim() as f64;
    let phi = k as f64 / n;
    let signed = if phi < 0.5 { phi } else { phi - 1.0 };
    2.0 * PI / params.t * signed
}

/// `k ↦ [[√(1 - c²), -c], [c, √(1 - c²)]]` with `c = C/λ̃_k` clamped to
/// `[-1, 1]`; `k = 0` (λ̃ = 0) is left out and acts as identity.
pub fn rotation_family(params: &HhlParameters) -> BTreeMap<usize, ComplexMatrix> {
    (1..params.register_dim())
        .map(|k| {
            let lambda = phase_register_to_eigenvalue(k, params);
            let c = (params.c_rot / lambda).clamp(-1.0, 1.0);
            let s = (1.0 - c * c).max(0.0).sqrt();
            let block = ComplexMatrix::from_real_rows(&[vec![s, -c], vec![c, s]])
                .expect("2x2 rotation is finite");
            (k, block)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HhlOutcome {
    /// Renormalized post-selected solution-register amplitudes.
    pub exact_solution_state: ComplexVector,
    pub success_probability: f64,
    pub record: Option<crate::qsim::MeasurementRecord>,
    /// `Σ_j sqrt(count_j / n_success) |j⟩` from sampling.
    pub d_tilde: Option<ComplexVector>,
}

/// The input-independent part of the circuit: controlled powers of `e^{iAt}`
/// and the rotation family. Built once per matrix, reused for every
/// right-hand side.
#[derive(Clone, Debug)]
pub struct HhlCircuit {
    params: HhlParameters,
    layout: QubitLayout,
    powers: Vec<ComplexMatrix>,
    inverse_powers: Vec<ComplexMatrix>,
    rotations: BTreeMap<usize, ComplexMatrix>,
}

impl HhlCircuit {
    pub fn new(a: &ComplexMatrix, params: HhlParameters) -> Result<Self> {
        if !a.is_square() || a.rows() != params.eigenbasis.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.eigenbasis.dim(),
                actual: a.rows(),
            });
        }
        let layout = QubitLayout::for_dimension(a.rows(), params.n_phase)?;
        let powers: Vec<ComplexMatrix> = (0..params.n_phase)
            .map(|s| {
                let tau = params.t * (1u64 << s) as f64;
                params
                    .eigenbasis
                    .apply_function(|l| C64::from_polar(1.0, l * tau))
            })
            .collect();
        let inverse_powers = powers.iter().map(ComplexMatrix::adjoint).collect();
        let rotations = rotation_family(&params);
        Ok(Self {
            params,
            layout,
            powers,
            inverse_powers,
            rotations,
        })
    }

    pub fn params(&self) -> &HhlParameters {
        &self.params
    }

    pub fn layout(&self) -> QubitLayout {
        self.layout
    }

    fn hadamard_all(&self, mut state: QuantumState) -> Result<QuantumState> {
        let h = hadamard();
        for bit in 0..self.layout.n_phase {
            state = state.apply_qubit_gate(Register::Phase, bit, &h)?;
        }
        Ok(state)
    }

    pub fn phase_estimation(&self, state: QuantumState) -> Result<QuantumState> {
        let mut state = self.hadamard_all(state)?;
        for (s, u) in self.powers.iter().enumerate() {
            state = state.apply_controlled_on_solution(s, u)?;
        }
        Ok(state.apply_qft_on_phase(true))
    }

    pub fn inverse_phase_estimation(&self, state: QuantumState) -> Result<QuantumState> {
        let mut state = state.apply_qft_on_phase(false);
        for (s, u) in self.inverse_powers.iter().enumerate().rev() {
            state = state.apply_controlled_on_solution(s, u)?;
        }
        self.hadamard_all(state)
    }

    /// Final state before any measurement, for input direction `b`.
    pub fn final_state(&self, b: &ComplexVector) -> Result<QuantumState> {
        let state = QuantumState::prepare(b, self.layout)?;
        let state = self.phase_estimation(state)?;
        let state = state.apply_controlled_by_phase_register(&self.rotations)?;
        self.inverse_phase_estimation(state)
    }

    pub fn run_exact(&self, b: &ComplexVector) -> Result<HhlOutcome> {
        let state = self.final_state(b)?;
        let (exact_solution_state, success_probability) =
            state.extract_conditional_amplitudes(1)?;
        Ok(HhlOutcome {
            exact_solution_state,
            success_probability,
            record: None,
            d_tilde: None,
        })
    }

    pub fn run_sampled(
        &self,
        b: &ComplexVector,
        n_shots: u64,
        seed: RngSeed,
    ) -> Result<HhlOutcome> {
        if n_shots == 0 {
            return Err(Error::InvalidConfig("n_shots must be at least 1".into()));
        }
        let state = self.final_state(b)?;
        let (exact_solution_state, success_probability) =
            state.extract_conditional_amplitudes(1)?;
        let record = ShotSampler::new(&state).sample(n_shots, seed);
        let d_tilde = record.magnitude_estimate(self.layout.solution_dim())?;
        Ok(HhlOutcome {
            exact_solution_state,
            success_probability,
            record: Some(record),
            d_tilde: Some(d_tilde),
        })
    }
}

pub fn run_hhl_exact(
    a: &ComplexMatrix,
    b: &ComplexVector,
    params: &HhlParameters,
) -> Result<HhlOutcome> {
    HhlCircuit::new(a, params.clone())?.run_exact(b)
}

pub fn run_hhl_sampled(
    a: &ComplexMatrix,
    b: &ComplexVector,
    params: &HhlParameters,
    n_shots: u64,
    seed: RngSeed,
) -> Result<HhlOutcome> {
    HhlCircuit::new(a, params.clone())?.run_sampled(b, n_shots, seed)
}
