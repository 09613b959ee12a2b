//! Dense statevector simulator over a solution ⊗ phase ⊗ ancilla layout.
//!
//! Global basis index = `solution | phase << n_solution | ancilla << (n_solution + n_phase)`,
//! so the solution register occupies the lowest bits and the ancilla is the
//! most significant qubit. Conditional extraction on (phase = 0, ancilla = a)
//! is then a contiguous slice.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};

pub const UNITARY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-10;
pub const MIN_POSTSELECT_PROBABILITY: f64 = 1e-14;

/// 2^17 amplitudes is the largest layout the experiments need; leave headroom.
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Register {
    Solution,
    Phase,
    Ancilla,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitLayout {
    pub n_solution: usize,
    pub n_phase: usize,
}

impl QubitLayout {
    pub const N_ANCILLA: usize = 1;

    pub fn new(n_solution: usize, n_phase: usize) -> Result<Self> {
        let layout = Self {
            n_solution,
            n_phase,
        };
        if layout.total_qubits() > MAX_QUBITS {
            return Err(Error::InvalidConfig(format!(
                "{} qubits exceeds the simulator limit of {MAX_QUBITS}",
                layout.total_qubits()
            )));
        }
        Ok(layout)
    }

    /// Layout whose solution register holds a vector of length `dim`.
    pub fn for_dimension(dim: usize, n_phase: usize) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        Self::new(dim.trailing_zeros() as usize, n_phase)
    }

    pub fn total_qubits(&self) -> usize {
        self.n_solution + self.n_phase + Self::N_ANCILLA
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn solution_dim(&self) -> usize {
        1 << self.n_solution
    }

    pub fn phase_dim(&self) -> usize {
        1 << self.n_phase
    }

    pub fn offset(&self, reg: Register) -> usize {
        match reg {
            Register::Solution => 0,
            Register::Phase => self.n_solution,
            Register::Ancilla => self.n_solution + self.n_phase,
        }
    }

    pub fn width(&self, reg: Register) -> usize {
        match reg {
            Register::Solution => self.n_solution,
            Register::Phase => self.n_phase,
            Register::Ancilla => Self::N_ANCILLA,
        }
    }

    pub fn index(&self, solution: usize, phase: usize, ancilla: usize) -> usize {
        solution | (phase << self.n_solution) | (ancilla << (self.n_solution + self.n_phase))
    }

    /// Inverse of [`QubitLayout::index`]: `(solution, phase, ancilla)`.
    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let solution = index & (self.solution_dim() - 1);
        let phase = (index >> self.n_solution) & (self.phase_dim() - 1);
        let ancilla = index >> (self.n_solution + self.n_phase);
        (solution, phase, ancilla)
    }

    fn register_value(&self, index: usize, reg: Register) -> usize {
        (index >> self.offset(reg)) & ((1 << self.width(reg)) - 1)
    }
}

/// Normalized amplitude vector over a [`QubitLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    layout: QubitLayout,
}

/// Basis vector `v / ‖v‖` on the solution register, everything else in `|0⟩`.
pub fn prepare_state(v: &ComplexVector, layout: QubitLayout) -> Result<QuantumState> {
    QuantumState::prepare(v, layout)
}

impl QuantumState {
    pub fn prepare(v: &ComplexVector, layout: QubitLayout) -> Result<Self> {
        if !v.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(v.len()));
        }
        if v.len() != layout.solution_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.solution_dim(),
                actual: v.len(),
            });
        }
        let norm = v.norm2();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        for (dst, src) in amplitudes.iter_mut().zip(v.iter()) {
            *dst = src / norm;
        }
        Ok(Self { amplitudes, layout })
    }

    /// Wraps a raw amplitude vector, checking dimension and normalization.
    pub fn from_amplitudes(amplitudes: Vec<C64>, layout: QubitLayout) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = crate::linalg::norm2(&amplitudes);
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidConfig(format!(
                "state norm {norm} is not 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn layout(&self) -> QubitLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Marginal distribution of one register.
    pub fn register_probabilities(&self, reg: Register) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.layout.width(reg)];
        for (i, z) in self.amplitudes.iter().enumerate() {
            out[self.layout.register_value(i, reg)] += z.norm_sqr();
        }
        out
    }

    /// `(U on reg ⊗ I elsewhere) |ψ⟩`.
    pub fn apply_unitary_on_register(mut self, u: &ComplexMatrix, reg: Register) -> Result<Self> {
        let width = self.layout.width(reg);
        let block = 1usize << width;
        if u.rows() != block || u.cols() != block {
            return Err(Error::DimensionMismatch {
                expected: block,
                actual: u.rows(),
            });
        }
        check_unitary(u)?;
        let offset = self.layout.offset(reg);
        let mask = (block - 1) << offset;
        let mut buf = vec![C64::new(0.0, 0.0); block];
        for base in 0..self.amplitudes.len() {
            if base & mask != 0 {
                continue;
            }
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = self.amplitudes[base | (k << offset)];
            }
            for row in 0..block {
                let mut acc = C64::new(0.0, 0.0);
                for (col, x) in buf.iter().enumerate() {
                    acc += u[(row, col)] * x;
                }
                self.amplitudes[base | (row << offset)] = acc;
            }
        }
        Ok(self)
    }

    /// 2x2 gate on bit `bit` of register `reg`.
    pub fn apply_qubit_gate(
        mut self,
        reg: Register,
        bit: usize,
        u: &ComplexMatrix,
    ) -> Result<Self> {
        if bit >= self.layout.width(reg) {
            return Err(Error::DimensionMismatch {
                expected: self.layout.width(reg),
                actual: bit,
            });
        }
        if u.rows() != 2 || u.cols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: u.rows(),
            });
        }
        check_unitary(u)?;
        let stride = 1usize << (self.layout.offset(reg) + bit);
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        for i in 0..self.amplitudes.len() {
            if i & stride != 0 {
                continue;
            }
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[i | stride];
            self.amplitudes[i] = u00 * a0 + u01 * a1;
            self.amplitudes[i | stride] = u10 * a0 + u11 * a1;
        }
        Ok(self)
    }

    /// Applies `u` to the solution register wherever phase bit `control` is 1.
    pub fn apply_controlled_on_solution(
        mut self,
        control: usize,
        u: &ComplexMatrix,
    ) -> Result<Self> {
        if control >= self.layout.n_phase {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_phase,
                actual: control,
            });
        }
        let block = self.layout.solution_dim();
        if u.rows() != block || u.cols() != block {
            return Err(Error::DimensionMismatch {
                expected: block,
                actual: u.rows(),
            });
        }
        check_unitary(u)?;
        let control_mask = 1usize << (self.layout.n_solution + control);
        let mut buf = vec![C64::new(0.0, 0.0); block];
        for base in (0..self.amplitudes.len()).step_by(block) {
            if base & control_mask == 0 {
                continue;
            }
            buf.copy_from_slice(&self.amplitudes[base..base + block]);
            let dst = &mut self.amplitudes[base..base + block];
            for (row, out) in dst.iter_mut().enumerate() {
                *out = buf
                    .iter()
                    .enumerate()
                    .map(|(col, x)| u[(row, col)] * x)
                    .sum();
            }
        }
        Ok(self)
    }

    /// For each phase value `k` in `family`, applies the 2x2 block to the
    /// ancilla; absent values act as identity.
    pub fn apply_controlled_by_phase_register(
        mut self,
        family: &BTreeMap<usize, ComplexMatrix>,
    ) -> Result<Self> {
        for (&k, u) in family {
            if k >= self.layout.phase_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.layout.phase_dim(),
                    actual: k,
                });
            }
            if u.rows() != 2 || u.cols() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    actual: u.rows(),
                });
            }
            check_unitary(u)?;
        }
        let l = self.layout;
        for (&k, u) in family {
            for sol in 0..l.solution_dim() {
                let i0 = l.index(sol, k, 0);
                let i1 = l.index(sol, k, 1);
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                self.amplitudes[i1] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
        Ok(self)
    }

    /// Quantum Fourier transform on the phase register,
    /// `|y⟩ ↦ N^{-1/2} Σ_k e^{±2πi yk/N} |k⟩` (`+` forward, `-` inverse).
    ///
    /// Evaluated as an FFT along the phase axis of every (solution, ancilla) slice.
    pub fn apply_qft_on_phase(mut self, inverse: bool) -> Self {
        let l = self.layout;
        let n = l.phase_dim();
        if n == 1 {
            return self;
        }
        let mut planner = FftPlanner::<f64>::new();
        // rustfft's forward transform uses e^{-2πi}, which is the inverse QFT
        let fft = if inverse {
            planner.plan_fft_forward(n)
        } else {
            planner.plan_fft_inverse(n)
        };
        let scale = 1.0 / (n as f64).sqrt();
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for anc in 0..2 {
            for sol in 0..l.solution_dim() {
                for (k, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amplitudes[l.index(sol, k, anc)];
                }
                fft.process(&mut buf);
                for (k, z) in buf.iter().enumerate() {
                    self.amplitudes[l.index(sol, k, anc)] = z * scale;
                }
            }
        }
        self
    }

    /// Solution-register amplitudes conditioned on phase register 0 and the
    /// given ancilla value, renormalized, with the probability of that condition.
    pub fn extract_conditional_amplitudes(
        &self,
        ancilla_value: usize,
    ) -> Result<(ComplexVector, f64)> {
        let l = self.layout;
        let start = l.index(0, 0, ancilla_value & 1);
        let slice = &self.amplitudes[start..start + l.solution_dim()];
        let probability: f64 = slice.iter().map(|z| z.norm_sqr()).sum();
        if probability < MIN_POSTSELECT_PROBABILITY {
            return Err(Error::PostSelectionImpossible { probability });
        }
        let norm = probability.sqrt();
        let v = slice.iter().map(|z| z / norm).collect();
        Ok((ComplexVector::from_vec_unchecked(v), probability.min(1.0)))
    }

    pub fn sample_z_basis(&self, n_shots: u64, seed: RngSeed) -> MeasurementRecord {
        ShotSampler::new(self).sample(n_shots, seed)
    }
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    let dev = u.unitary_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// Dense QFT matrix on `n_qubits`, `F_{ky} = N^{-1/2} e^{2πi ky/N}`.
pub fn qft_matrix(n_qubits: usize) -> ComplexMatrix {
    let n = 1usize << n_qubits;
    let mut m = ComplexMatrix::zeros(n, n);
    let scale = 1.0 / (n as f64).sqrt();
    for k in 0..n {
        for y in 0..n {
            let angle = 2.0 * std::f64::consts::PI * ((k * y) % n) as f64 / n as f64;
            m[(k, y)] = C64::from_polar(scale, angle);
        }
    }
    m
}

pub fn hadamard() -> ComplexMatrix {
    crate::linalg::PauliFactor::H.matrix()
}

pub fn pauli_x() -> ComplexMatrix {
    crate::linalg::PauliFactor::X.matrix()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent child seed for stream `stream`, via a splitmix64 finalizer.
    pub fn derive(self, stream: u64) -> RngSeed {
        RngSeed(splitmix64(
            self.0 ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        ))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Z-basis readout statistics.
///
/// Successes are shots with ancilla 1 and phase register 0; every other
/// shot is a failure. `n_phase_leak` counts the failures that had ancilla 1
/// but a nonzero phase register.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub success_counts: BTreeMap<usize, u64>,
    pub n_success: u64,
    pub n_failure: u64,
    pub n_phase_leak: u64,
    pub n_shots: u64,
}

impl MeasurementRecord {
    pub fn count(&self, j: usize) -> u64 {
        self.success_counts.get(&j).copied().unwrap_or(0)
    }

    /// Adds another record's counts into this one.
    pub fn merge(&mut self, other: &MeasurementRecord) {
        for (&j, &n) in &other.success_counts {
            *self.success_counts.entry(j).or_insert(0) += n;
        }
        self.n_success += other.n_success;
        self.n_failure += other.n_failure;
        self.n_phase_leak += other.n_phase_leak;
        self.n_shots += other.n_shots;
    }

    /// `Σ_j sqrt(count_j / n_success) |j⟩`, unit norm and non-negative.
    pub fn magnitude_estimate(&self, dim: usize) -> Result<ComplexVector> {
        if self.n_success == 0 {
            return Err(Error::NoSuccessfulShots {
                n_shots: self.n_shots,
            });
        }
        let total = self.n_success as f64;
        let v: Vec<C64> = (0..dim)
            .map(|j| C64::new((self.count(j) as f64 / total).sqrt(), 0.0))
            .collect();
        ComplexVector::from_vec_unchecked(v).normalized()
    }
}

/// Inverse-CDF sampler over a fixed state's Z-basis distribution.
#[derive(Clone, Debug)]
pub struct ShotSampler {
    cumulative: Vec<f64>,
    layout: QubitLayout,
}

impl ShotSampler {
    pub fn new(state: &QuantumState) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .amplitudes
            .iter()
            .map(|z| {
                acc += z.norm_sqr();
                acc
            })
            .collect();
        Self {
            cumulative,
            layout: state.layout,
        }
    }

    pub fn draw_index<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty state");
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    pub fn sample(&self, n_shots: u64, seed: RngSeed) -> MeasurementRecord {
        let mut rng = seed.rng();
        let mut record = MeasurementRecord {
            n_shots,
            ..Default::default()
        };
        for _ in 0..n_shots {
            let (sol, phase, anc) = self.layout.split(self.draw_index(&mut rng));
            if anc == 1 && phase == 0 {
                *record.success_counts.entry(sol).or_insert(0) += 1;
                record.n_success += 1;
            } else {
                if anc == 1 {
                    record.n_phase_leak += 1;
                }
                record.n_failure += 1;
            }
        }
        record
    }
}
