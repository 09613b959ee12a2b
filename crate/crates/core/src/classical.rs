//! Classical iterative refinement, used as a reference for the quantum loop.

use crate::error::Result;
use crate::linalg::{residual, solve, ComplexMatrix, ComplexVector, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleStep {
    pub x: ComplexVector,
    pub residual_norm: f64,
}

#[derive(Clone, Debug, Default)]
pub struct OracleTrace {
    /// One entry per update: `x_{m+1}` and `‖b - A x_{m+1}‖`.
    pub iterations: Vec<OracleStep>,
    pub converged: bool,
}

/// `r_m = b - A x_m`, `d_m = inner(A, r_m)`, `x_{m+1} = x_m + d_m`, from
/// `x_0 = 0` until `‖r_m‖ < ε` or `max_iterations` updates.
pub fn classical_refine<F>(
    a: &ComplexMatrix,
    b: &ComplexVector,
    mut inner_solver: F,
    epsilon: f64,
    max_iterations: usize,
) -> Result<OracleTrace>
where
    F: FnMut(&ComplexMatrix, &ComplexVector) -> Result<ComplexVector>,
{
    let mut x = ComplexVector::zeros(b.len());
    let mut trace = OracleTrace::default();
    let mut r = residual(a, b, &x)?;
    for _ in 0..max_iterations {
        if r.norm2() < epsilon {
            break;
        }
        let d = inner_solver(a, &r)?;
        x = x.add(&d)?;
        r = residual(a, b, &x)?;
        trace.iterations.push(OracleStep {
            x: x.clone(),
            residual_norm: r.norm2(),
        });
    }
    trace.converged = r.norm2() < epsilon;
    Ok(trace)
}

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(v: f64, digits: u32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let exponent = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits as i32 - 1 - exponent);
    (v * scale).round() / scale
}

/// Exact solve whose unit direction is rounded entrywise to `digits`
/// significant digits, then rescaled to the exact norm. A stand-in for a
/// fixed-precision inner solver.
pub fn truncated_inner_solver(
    digits: u32,
) -> impl Fn(&ComplexMatrix, &ComplexVector) -> Result<ComplexVector> {
    let digits = digits.clamp(1, 15);
    move |a, r| {
        let d = solve(a, r)?;
        let norm = d.norm2();
        if norm == 0.0 {
            return Ok(d);
        }
        let rounded: Vec<C64> = d
            .iter()
            .map(|z| {
                C64::new(
                    round_significant(z.re / norm, digits),
                    round_significant(z.im / norm, digits),
                )
            })
            .collect();
        Ok(ComplexVector::new(rounded)?.scale(C64::new(norm, 0.0)))
    }
}
