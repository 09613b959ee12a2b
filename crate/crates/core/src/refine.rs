//! Multi-resolution measurement refinement.
//!
//! The loop is generic over a problem pair (generator `f`, adjustor `g`)
//! and an inner direction solver. Each iteration computes `r_m = f(x_m)`,
//! stops once `‖r_m‖ < ε`, asks the solver for a unit direction `d̃_m`,
//! and updates `x_{m+1} = x_m + g(r_m, d̃_m)`.
//!
//! Two pairs are provided: [`Qls1Pair`] (plain residual, scale and phase
//! correction) and [`Qls2Pair`] (residual shifted by a non-negative vector
//! so the next direction is mostly non-negative).

use crate::error::{Error, Result};
use crate::hhl::{choose_parameters, HhlCircuit};
use crate::linalg::{complex_arg, residual, ComplexMatrix, ComplexVector, LinearSystem, C64};
use crate::qsim::RngSeed;

/// Below this `‖A d̃‖` the measured direction carries no usable information.
pub const DEGENERATE_DIRECTION_TOL: f64 = 1e-14;

/// Below this the previous update is considered stalled and the shift is reset.
pub const STALLED_UPDATE_TOL: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Read the exact post-selected amplitudes; no measurements are spent.
    Ideal,
    /// Estimate magnitudes from `n_shots` Z-basis measurements per iteration.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftRule {
    /// `x_shift,m+1 = (‖g_m‖ / ‖g_{m-1}‖) |g_m|`.
    Empirical,
    /// Shift pinned at zero; reduces QLS2 to QLS1.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverVariant {
    Qls1,
    Qls2(ShiftRule),
}

impl SolverVariant {
    pub const QLS2: SolverVariant = SolverVariant::Qls2(ShiftRule::Empirical);
}

#[derive(Clone, Debug)]
pub struct RefinementConfig {
    pub epsilon: f64,
    pub n_shots: u64,
    pub max_iterations: usize,
    pub mode: Mode,
    pub seed: RngSeed,
    pub hhl_phase_qubits: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-16,
            n_shots: 10_000,
            max_iterations: 100,
            mode: Mode::Sampled,
            seed: RngSeed(0),
            hhl_phase_qubits: 6,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.n_shots == 0 {
            return Err(Error::InvalidConfig("n_shots must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One completed iteration `m`, describing the iterate `x_{m+1}` it produced.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub m: usize,
    /// `‖b - A x_{m+1}‖`.
    pub residual_norm: f64,
    /// `‖f_m(x_m)‖`, the norm of the problem handed to the inner solver.
    pub generator_norm: f64,
    /// `‖x - x_{m+1}‖ / ‖x‖` when the exact solution is known.
    pub relative_error: Option<f64>,
    /// Measurements spent through this iteration, failures included.
    pub n_total: u64,
    pub update_accepted: bool,
    /// `‖x_{m+1} - x_m‖`.
    pub update_norm: f64,
    pub x: ComplexVector,
}

#[derive(Clone, Debug, Default)]
pub struct RefinementTrace {
    pub records: Vec<IterationRecord>,
}

impl RefinementTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_relative_error(&self) -> Option<f64> {
        self.last().and_then(|r| r.relative_error)
    }

    /// Relative error after iteration `m`, or the last available one if the
    /// run stopped earlier.
    pub fn relative_error_at(&self, m: usize) -> Option<f64> {
        self.records
            .get(m)
            .or_else(|| self.records.last())
            .and_then(|r| r.relative_error)
    }

    /// Observed per-iteration contraction `‖f(x_{m+1})‖ / ‖f(x_m)‖`.
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.residual_norm / r.generator_norm)
            .collect()
    }
}

/// Generator/adjustor pair.
pub trait ProblemPair {
    /// Solution-domain residual `b - A x`.
    fn residual(&self, x: &ComplexVector) -> Result<ComplexVector>;

    /// `f_m(x_m)`, the problem handed to the inner solver.
    fn generate(&self, x: &ComplexVector) -> Result<ComplexVector> {
        self.residual(x)
    }

    /// `g_m(d̃_m)`, mapping the measured direction back to a solution update.
    fn adjust(&self, r: &ComplexVector, d_tilde: &ComplexVector) -> Result<ComplexVector>;

    /// Called with the accepted update before the next iteration.
    fn advance(&mut self, _update: &ComplexVector) {}
}

/// Produces a unit-norm direction approximating `A^{-1} r / ‖A^{-1} r‖`.
pub trait DirectionSolver {
    fn solve(&mut self, r: &ComplexVector, seed: RngSeed) -> Result<ComplexVector>;

    /// Measurements spent by one call, successful or not.
    fn shots_per_call(&self) -> u64;
}

/// `r_m = b - A x_m`.
pub fn qls1_generate(
    a: &ComplexMatrix,
    b: &ComplexVector,
    x_m: &ComplexVector,
) -> Result<ComplexVector> {
    residual(a, b, x_m)
}

/// Scale factor `c1 = ‖r‖ / ‖A d̃‖` and phase `c2` such that
/// `A (c1 e^{i c2} d̃)` best aligns with `r`.
fn scale_and_phase(
    a: &ComplexMatrix,
    r: &ComplexVector,
    d_tilde: &ComplexVector,
) -> Result<(f64, f64)> {
    let ad = a.matvec(d_tilde)?;
    let norm = ad.norm2();
    if norm <= DEGENERATE_DIRECTION_TOL {
        return Err(Error::DegenerateDirection { norm });
    }
    let c1 = r.norm2() / norm;
    let c2 = complex_arg(ad.inner(r)?);
    Ok((c1, c2))
}

/// `c1 e^{i c2} d̃`.
pub fn qls1_adjust(
    a: &ComplexMatrix,
    r_m: &ComplexVector,
    d_tilde: &ComplexVector,
) -> Result<ComplexVector> {
    let (c1, c2) = scale_and_phase(a, r_m, d_tilde)?;
    Ok(d_tilde.scale(C64::from_polar(c1, c2)))
}

/// `r_m = b - A x_m + A x_shift`.
pub fn qls2_generate(
    a: &ComplexMatrix,
    b: &ComplexVector,
    x_m: &ComplexVector,
    x_shift: &ComplexVector,
) -> Result<ComplexVector> {
    residual(a, b, x_m)?.add(&a.matvec(x_shift)?)
}

/// `c1 e^{i c2} d̃ - x_shift`.
pub fn qls2_adjust(
    a: &ComplexMatrix,
    r_m: &ComplexVector,
    d_tilde: &ComplexVector,
    x_shift: &ComplexVector,
) -> Result<ComplexVector> {
    qls1_adjust(a, r_m, d_tilde)?.sub(x_shift)
}

/// `(‖g_m‖ / prev_update_norm) |g_m|`; zero if the previous update stalled.
pub fn qls2_next_shift(g_m: &ComplexVector, prev_update_norm: f64) -> ComplexVector {
    if prev_update_norm <= STALLED_UPDATE_TOL {
        return ComplexVector::zeros(g_m.len());
    }
    let ratio = g_m.norm2() / prev_update_norm;
    g_m.abs_entries().scale(C64::new(ratio, 0.0))
}

#[derive(Clone, Debug)]
pub struct Qls1Pair<'a> {
    pub a: &'a ComplexMatrix,
    pub b: &'a ComplexVector,
}

impl ProblemPair for Qls1Pair<'_> {
    fn residual(&self, x: &ComplexVector) -> Result<ComplexVector> {
        qls1_generate(self.a, self.b, x)
    }

    fn adjust(&self, r: &ComplexVector, d_tilde: &ComplexVector) -> Result<ComplexVector> {
        qls1_adjust(self.a, r, d_tilde)
    }
}

#[derive(Clone, Debug)]
pub struct Qls2Pair<'a> {
    pub a: &'a ComplexMatrix,
    pub b: &'a ComplexVector,
    pub rule: ShiftRule,
    pub shift: ComplexVector,
    /// `‖g_{m-1}‖`; `None` before the first accepted update.
    pub prev_update_norm: Option<f64>,
}

impl<'a> Qls2Pair<'a> {
    pub fn new(a: &'a ComplexMatrix, b: &'a ComplexVector, rule: ShiftRule) -> Self {
        Self {
            a,
            b,
            rule,
            shift: ComplexVector::zeros(b.len()),
            prev_update_norm: None,
        }
    }
}

impl ProblemPair for Qls2Pair<'_> {
    fn residual(&self, x: &ComplexVector) -> Result<ComplexVector> {
        residual(self.a, self.b, x)
    }

    fn generate(&self, x: &ComplexVector) -> Result<ComplexVector> {
        qls2_generate(self.a, self.b, x, &self.shift)
    }

    fn adjust(&self, r: &ComplexVector, d_tilde: &ComplexVector) -> Result<ComplexVector> {
        qls2_adjust(self.a, r, d_tilde, &self.shift)
    }

    fn advance(&mut self, update: &ComplexVector) {
        let norm = update.norm2();
        if self.rule == ShiftRule::Empirical {
            // at m = 0 the ratio uses g_0 in place of g_{-1}
            let prev = self.prev_update_norm.unwrap_or(norm);
            self.shift = qls2_next_shift(update, prev);
        }
        self.prev_update_norm = Some(norm);
    }
}

/// Exact post-selected HHL amplitudes as the direction.
pub struct IdealHhl<'c> {
    pub circuit: &'c HhlCircuit,
}

impl DirectionSolver for IdealHhl<'_> {
    fn solve(&mut self, r: &ComplexVector, _seed: RngSeed) -> Result<ComplexVector> {
        Ok(self.circuit.run_exact(r)?.exact_solution_state)
    }

    fn shots_per_call(&self) -> u64 {
        0
    }
}

/// Magnitudes estimated from `n_shots` HHL measurements as the direction.
pub struct SampledHhl<'c> {
    pub circuit: &'c HhlCircuit,
    pub n_shots: u64,
}

impl DirectionSolver for SampledHhl<'_> {
    fn solve(&mut self, r: &ComplexVector, seed: RngSeed) -> Result<ComplexVector> {
        let outcome = self.circuit.run_sampled(r, self.n_shots, seed)?;
        Ok(outcome.d_tilde.expect("sampled run yields d_tilde"))
    }

    fn shots_per_call(&self) -> u64 {
        self.n_shots
    }
}

/// Seed for attempt `attempt` of iteration `m`.
pub fn iteration_seed(base: RngSeed, m: usize, attempt: u32) -> RngSeed {
    base.derive(m as u64).derive(attempt as u64)
}

/// The generic refinement loop, starting from `x_0 = 0`.
///
/// A failed inner solve is retried once with a fresh seed; if that also
/// fails the iteration is recorded with `update_accepted = false` and `x`
/// is left unchanged.
pub fn refine<P: ProblemPair + ?Sized, S: DirectionSolver + ?Sized>(
    pair: &mut P,
    solver: &mut S,
    dim: usize,
    x_true: Option<&ComplexVector>,
    epsilon: f64,
    max_iterations: usize,
    seed: RngSeed,
) -> Result<RefinementTrace> {
    let mut x = ComplexVector::zeros(dim);
    let mut trace = RefinementTrace::default();
    let mut n_total = 0u64;
    let rel_err = |x: &ComplexVector| -> Option<f64> {
        let truth = x_true?;
        Some(truth.sub(x).ok()?.norm2() / truth.norm2())
    };

    for m in 0..max_iterations {
        let r = pair.generate(&x)?;
        let generator_norm = r.norm2();
        if generator_norm < epsilon {
            break;
        }
        let mut update = None;
        for attempt in 0..2 {
            n_total += solver.shots_per_call();
            let step = solver
                .solve(&r, iteration_seed(seed, m, attempt))
                .and_then(|d| pair.adjust(&r, &d));
            match step {
                Ok(g) => {
                    update = Some(g);
                    break;
                }
                Err(e) if e.is_numerical() => continue,
                Err(e) => return Err(e),
            }
        }
        let (accepted, update_norm) = match update {
            Some(g) => {
                x = x.add(&g)?;
                pair.advance(&g);
                (true, g.norm2())
            }
            None => (false, 0.0),
        };
        trace.records.push(IterationRecord {
            m,
            residual_norm: pair.residual(&x)?.norm2(),
            generator_norm,
            relative_error: rel_err(&x),
            n_total,
            update_accepted: accepted,
            update_norm,
            x: x.clone(),
        });
    }
    Ok(trace)
}

/// Refinement of `sys` with an HHL inner solver built once from `sys.a`.
pub fn qmrm_run(
    sys: &LinearSystem,
    variant: SolverVariant,
    config: &RefinementConfig,
) -> Result<RefinementTrace> {
    config.validate()?;
    let params = choose_parameters(&sys.a, config.hhl_phase_qubits)?;
    let circuit = HhlCircuit::new(&sys.a, params)?;
    qmrm_run_with_circuit(sys, &circuit, variant, config)
}

/// As [`qmrm_run`], reusing a prebuilt circuit for `sys.a`.
pub fn qmrm_run_with_circuit(
    sys: &LinearSystem,
    circuit: &HhlCircuit,
    variant: SolverVariant,
    config: &RefinementConfig,
) -> Result<RefinementTrace> {
    config.validate()?;
    let (a, b) = (&sys.a, &sys.b);
    let mut ideal;
    let mut sampled;
    let solver: &mut dyn DirectionSolver = match config.mode {
        Mode::Ideal => {
            ideal = IdealHhl { circuit };
            &mut ideal
        }
        Mode::Sampled => {
            sampled = SampledHhl {
                circuit,
                n_shots: config.n_shots,
            };
            &mut sampled
        }
    };
    let (dim, x_true) = (sys.dim(), sys.x_true.as_ref());
    let (eps, max_it, seed) = (config.epsilon, config.max_iterations, config.seed);
    match variant {
        SolverVariant::Qls1 => refine(
            &mut Qls1Pair { a, b },
            solver,
            dim,
            x_true,
            eps,
            max_it,
            seed,
        ),
        SolverVariant::Qls2(rule) => refine(
            &mut Qls2Pair::new(a, b, rule),
            solver,
            dim,
            x_true,
            eps,
            max_it,
            seed,
        ),
    }
}
