//! Dense complex linear algebra for small systems.
//!
//! Everything here is sized for the 4x4 and 8x8 matrices the solver works
//! with: row-major storage, cyclic Jacobi for Hermitian eigenproblems and
//! partial-pivot LU for direct solves.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute elementwise tolerance for the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Smallest eigenvalue magnitude accepted for an invertible system matrix.
pub const SINGULAR_TOL: f64 = 1e-12;

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex vector. Never empty, never holds NaN or infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| c(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be at least 1");
        Self(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = c(1.0);
        v
    }

    /// Wraps entries produced by internal arithmetic on finite inputs.
    pub(crate) fn from_vec_unchecked(entries: Vec<C64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        inner_product(self, other)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Entrywise modulus as a real-valued complex vector.
    pub fn abs_entries(&self) -> Self {
        Self(self.0.iter().map(|z| c(z.norm())).collect())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm2();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(c(1.0 / n)))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `sum conj(a_i) b_i`.
pub fn inner_product(a: &ComplexVector, b: &ComplexVector) -> Result<C64> {
    check_dim(a.len(), b.len())?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Argument of a complex number in (-pi, pi]; zero maps to zero.
pub fn complex_arg(z: C64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![c(0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            check_dim(n_cols, row.len())?;
            data.extend_from_slice(row);
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = c(x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == c(0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.cols, v.len())?;
        let out = (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v.iter())
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect();
        Ok(ComplexVector(out))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Largest elementwise modulus of `M - M^H`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    /// Largest elementwise modulus of `U^H U - I`; infinite for non-square input.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = c(0.0);
                for k in 0..n {
                    s += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    s -= c(1.0);
                }
                dev = dev.max(s.norm());
            }
        }
        dev
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Single-qubit factor of a Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliFactor {
    I,
    X,
    Y,
    Z,
    /// Hadamard. Not a Pauli matrix, but Hermitian and accepted in strings.
    H,
}

impl PauliFactor {
    pub fn matrix(self) -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = c(0.0);
        let one = c(1.0);
        let rows = match self {
            PauliFactor::I => [[one, z], [z, one]],
            PauliFactor::X => [[z, one], [one, z]],
            PauliFactor::Y => [[z, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), z]],
            PauliFactor::Z => [[one, z], [z, -one]],
            PauliFactor::H => [[c(s), c(s)], [c(s), c(-s)]],
        };
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    fn from_char(ch: char) -> Result<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Ok(PauliFactor::I),
            'X' => Ok(PauliFactor::X),
            'Y' => Ok(PauliFactor::Y),
            'Z' => Ok(PauliFactor::Z),
            'H' => Ok(PauliFactor::H),
            other => Err(Error::InvalidPauli(format!("unknown factor '{other}'"))),
        }
    }
}

/// `coeff * (ops[0] ⊗ ops[1] ⊗ ...)`; serialized as `{"coeff": 2.0, "ops": "ZZ"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PauliTermRepr", into = "PauliTermRepr")]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<PauliFactor>,
}

#[derive(Serialize, Deserialize)]
struct PauliTermRepr {
    coeff: f64,
    ops: String,
}

impl TryFrom<PauliTermRepr> for PauliTerm {
    type Error = Error;
    fn try_from(r: PauliTermRepr) -> Result<Self> {
        PauliTerm::parse(r.coeff, &r.ops)
    }
}

impl From<PauliTerm> for PauliTermRepr {
    fn from(t: PauliTerm) -> Self {
        PauliTermRepr {
            coeff: t.coeff,
            ops: t.ops_string(),
        }
    }
}

impl PauliTerm {
    pub fn new(coeff: f64, ops: Vec<PauliFactor>) -> Self {
        Self { coeff, ops }
    }

    pub fn parse(coeff: f64, ops: &str) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::NonFinite);
        }
        let ops = ops
            .chars()
            .filter(|ch| !ch.is_whitespace())
            .map(PauliFactor::from_char)
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::InvalidPauli("empty operator string".into()));
        }
        Ok(Self { coeff, ops })
    }

    pub fn ops_string(&self) -> String {
        self.ops.iter().map(|f| format!("{f:?}")).collect()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}", self.coeff, self.ops_string())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    /// Parses `"2.0*ZZ"` or `"ZZ"` (coefficient 1).
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('*') {
            Some((coeff, ops)) => {
                let coeff = coeff
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPauli(format!("bad coefficient: {e}")))?;
                Self::parse(coeff, ops)
            }
            None => Self::parse(1.0, s),
        }
    }
}

/// Sums `coeff * (factor_1 ⊗ ... ⊗ factor_k)` over all terms.
pub fn pauli_tensor_build(terms: &[PauliTerm]) -> Result<ComplexMatrix> {
    let k = terms
        .first()
        .ok_or_else(|| Error::InvalidPauli("no terms".into()))?
        .ops
        .len();
    if k == 0 {
        return Err(Error::InvalidPauli("empty operator string".into()));
    }
    let dim = 1usize << k;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for term in terms {
        if term.ops.len() != k {
            return Err(Error::InvalidPauli(format!(
                "term {term} has {} factors, expected {k}",
                term.ops.len()
            )));
        }
        let product = term
            .ops
            .iter()
            .skip(1)
            .fold(term.ops[0].matrix(), |m, f| m.kron(&f.matrix()));
        acc = acc.add(&product.scale(c(term.coeff)))?;
    }
    Ok(acc)
}

/// `[[0, A], [A^H, 0]]`, Hermitian for any square `A`.
pub fn hermitian_dilate(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, n + j)] = a[(i, j)];
            out[(n + j, i)] = a[(i, j)].conj();
        }
    }
    Ok(out)
}

/// Spectral decomposition `A = V diag(eigenvalues) V^H` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: ComplexMatrix,
}

impl Eigendecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Λ) V^H`.
    pub fn apply_function<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj())
                    .sum();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(c)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Coefficients `β_j = <u_j, v>`.
    pub fn coefficients(&self, v: &ComplexVector) -> Result<Vec<C64>> {
        check_dim(self.dim(), v.len())?;
        Ok((0..self.dim())
            .map(|j| {
                (0..self.dim())
                    .map(|i| self.eigenvectors[(i, j)].conj() * v[i])
                    .sum()
            })
            .collect())
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
pub fn eigendecompose(a: &ComplexMatrix) -> Result<Eigendecomposition> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = a.rows;
    let mut m = a.clone();
    // symmetrize away the rounding the check tolerated
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re);
        for j in i + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                // G = diag(1, conj(phase)) * [[cos, sin], [-sin, cos]] on the (p, q) plane
                let g_pp = c(cos);
                let g_pq = c(sin);
                let g_qp = -phase.conj() * sin;
                let g_qq = phase.conj() * cos;
                // columns: M <- M G
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * g_pp + mkq * g_qp;
                    m[(k, q)] = mkp * g_pq + mkq * g_qq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
                // rows: M <- G^H M
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
                    m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
                }
                m[(p, q)] = c(0.0);
                m[(q, p)] = c(0.0);
                m[(p, p)] = c(m[(p, p)].re);
                m[(q, q)] = c(m[(q, q)].re);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(Eigendecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// `max|λ| / min|λ|` for a Hermitian matrix.
pub fn condition_number(a: &ComplexMatrix) -> Result<f64> {
    let eig = eigendecompose(a)?;
    let min = eig.min_abs_eigenvalue();
    if min <= SINGULAR_TOL {
        return Err(Error::Singular);
    }
    Ok(eig.max_abs_eigenvalue() / min)
}

/// `A x = b` together with the known solution, when there is one.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: ComplexMatrix,
    pub b: ComplexVector,
    pub x_true: Option<ComplexVector>,
}

impl LinearSystem {
    pub fn new(a: ComplexMatrix, b: ComplexVector, x_true: Option<ComplexVector>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows,
                cols: a.cols,
            });
        }
        check_dim(a.rows, b.len())?;
        if let Some(x) = &x_true {
            check_dim(a.rows, x.len())?;
        }
        let min_singular = if a.is_hermitian() {
            eigendecompose(&a)?.min_abs_eigenvalue()
        } else {
            let gram = a.adjoint().matmul(&a)?;
            eigendecompose(&gram)?.min_abs_eigenvalue().max(0.0).sqrt()
        };
        if min_singular <= SINGULAR_TOL {
            return Err(Error::Singular);
        }
        Ok(Self { a, b, x_true })
    }

    /// Builds `b = A x` from a known solution.
    pub fn from_solution(a: ComplexMatrix, x: ComplexVector) -> Result<Self> {
        let b = a.matvec(&x)?;
        Self::new(a, b, Some(x))
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `‖x - x_m‖ / ‖x‖`, if the exact solution is known.
    pub fn relative_error(&self, x_m: &ComplexVector) -> Option<f64> {
        let x = self.x_true.as_ref()?;
        let diff = x.sub(x_m).ok()?;
        Some(diff.norm2() / x.norm2())
    }
}

pub fn solve_direct(sys: &LinearSystem) -> Result<ComplexVector> {
    solve(&sys.a, &sys.b)
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    check_dim(n, b.len())?;
    let mut lu = a.clone();
    let mut rhs = b.0.clone();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[(i, col)].norm().total_cmp(&lu[(j, col)].norm()))
            .expect("non-empty pivot range");
        if lu[(pivot, col)].norm() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = lu[(col, k)];
                lu[(col, k)] = lu[(pivot, k)];
                lu[(pivot, k)] = tmp;
            }
            rhs.swap(col, pivot);
        }
        let diag = lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] / diag;
            if factor == c(0.0) {
                continue;
            }
            for k in col..n {
                let sub = factor * lu[(col, k)];
                lu[(row, k)] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[row] -= sub;
        }
    }
    let mut x = vec![c(0.0); n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in row + 1..n {
            s -= lu[(row, k)] * x[k];
        }
        x[row] = s / lu[(row, row)];
    }
    Ok(ComplexVector(x))
}

/// `b - A x`.
pub fn residual(a: &ComplexMatrix, b: &ComplexVector, x: &ComplexVector) -> Result<ComplexVector> {
    check_dim(a.rows, b.len())?;
    b.sub(&a.matvec(x)?)
}
