//! Dense complex matrix kernel.
//!
//! Everything in the crate is built on row-major dense matrices over
//! `Complex64`. Composite spaces H₁⊗H₂ use one global index convention:
//! the pair (i, j) maps to the flat index `i * dim2 + j`. The Kronecker
//! product, the partial traces and the Choi matrices all follow it.

mod eig;
mod random;

pub use eig::hermitian_eig;
pub use random::{random_hermitian, random_instrument, random_povm, random_state, random_unitary};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerances used by every validator in the crate.
///
/// All comparisons are absolute and in the max-entry norm, which is adequate
/// for the unit-scale operators this crate deals with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation from `m = m†`.
    pub hermitian_tol: f64,
    /// Band `[-psd_tol, 0)` of eigenvalues clamped to zero.
    pub psd_tol: f64,
    /// Allowed deviation of traces and probability sums.
    pub trace_tol: f64,
    /// Allowed entrywise deviation when comparing matrices or maps.
    pub eq_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian_tol: 1e-9,
            psd_tol: 1e-9,
            trace_tol: 1e-9,
            eq_tol: 1e-9,
        }
    }
}

impl Tolerances {
    /// Uniform tolerance for all four fields.
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            hermitian_tol: tol,
            psd_tol: tol,
            trace_tol: tol,
            eq_tol: tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.hermitian_tol,
            self.psd_tol,
            self.trace_tol,
            self.eq_tol,
        ];
        if fields.iter().any(|&t| t <= 0.0 || t.is_nan()) {
            return Err(Error::InvariantViolation {
                object: "Tolerances",
                reason: "all fields must be positive",
                residual: 0.0,
            });
        }
        Ok(())
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvariantViolation {
                object: "ComplexMatrix",
                reason: "entry count must equal rows * cols",
                residual: entries.len() as f64 - (rows * cols) as f64,
            });
        }
        Ok(ComplexMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Identity scaled by a real factor.
    pub fn scaled_identity(dim: usize, factor: f64) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(factor, 0.0));
        }
        m
    }

    /// Builds from nested rows of `(re, im)` pairs; panics on ragged input.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for &(re, im) in row {
                entries.push(Complex64::new(re, im));
            }
        }
        ComplexMatrix {
            rows: r,
            cols: c,
            entries,
        }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    /// Column vector for the computational basis state `|k⟩`.
    pub fn basis_column(dim: usize, k: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m.set(k, 0, Complex64::new(1.0, 0.0));
        m
    }

    /// Matrix unit E_ij (1 at row i, column j).
    pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.set(i, j, Complex64::new(1.0, 0.0));
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry magnitude (max-entry norm).
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Max-entry norm of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    /// Max-entry deviation from `m = m†`.
    pub fn hermitian_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_residual() <= tol
    }

    /// (m + m†)/2, used to stabilize nearly-Hermitian inputs.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Outer product `u · v†` of two column vectors.
pub fn outer(u: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(u.cols(), 1);
    assert_eq!(v.cols(), 1);
    let mut out = ComplexMatrix::zeros(u.rows(), v.rows());
    for i in 0..u.rows() {
        for j in 0..v.rows() {
            out.set(i, j, u.get(i, 0) * v.get(j, 0).conj());
        }
    }
    out
}

/// Kronecker product. Composite row index of (i, k) is `i * b.rows() + k`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a.get(i, j);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Which tensor factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    /// Return tr_{H₂}: a dim1 × dim1 matrix.
    First,
    /// Return tr_{H₁}: a dim2 × dim2 matrix.
    Second,
}

/// Partial trace of a square matrix on H₁⊗H₂ under the global index
/// convention (i, j) ↦ i·dim2 + j.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim1: usize,
    dim2: usize,
    keep: Keep,
) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() != dim1 * dim2 {
        return Err(Error::DimMismatch(format!(
            "partial trace of {}x{} with factors {}x{}",
            m.rows(),
            m.cols(),
            dim1,
            dim2
        )));
    }
    match keep {
        Keep::First => {
            let mut out = ComplexMatrix::zeros(dim1, dim1);
            for i in 0..dim1 {
                for j in 0..dim1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..dim2 {
                        acc += m.get(i * dim2 + k, j * dim2 + k);
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = ComplexMatrix::zeros(dim2, dim2);
            for i in 0..dim2 {
                for j in 0..dim2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..dim1 {
                        acc += m.get(k * dim2 + i, k * dim2 + j);
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
    }
}

/// Hermitian PSD square root via eigendecomposition.
///
/// Eigenvalues in `[-psd_tol, 0)` are clamped to zero; anything below the
/// band is rejected as not PSD. Positive eigenvalues at roundoff scale are
/// clamped too: the square root amplifies roundoff noise (√(n·ε) instead of
/// n·ε), so without the clamp the root of a projection picks up entries far
/// above the eigensolver residual.
pub fn psd_sqrt(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let (lambda, v) = hermitian_eig(m, tol)?;
    let scale = lambda.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let zero_band = 8.0 * f64::EPSILON * scale * lambda.len() as f64;
    rebuild_from_eig(&lambda, &v, tol, zero_band, f64::sqrt)
}

/// Inverse PSD square root; rejects eigenvalues below `psd_tol` as singular.
pub fn inv_sqrt_psd(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let (lambda, v) = hermitian_eig(m, tol)?;
    if let Some(&min) = lambda.first() {
        if min < tol.psd_tol {
            return Err(Error::SingularNormalizer(min));
        }
    }
    rebuild_from_eig(&lambda, &v, tol, 0.0, |x| 1.0 / x.sqrt())
}

fn rebuild_from_eig(
    lambda: &[f64],
    v: &ComplexMatrix,
    tol: &Tolerances,
    zero_band: f64,
    f: impl Fn(f64) -> f64,
) -> Result<ComplexMatrix> {
    let n = v.rows();
    let mut mapped = Vec::with_capacity(n);
    for &l in lambda {
        if l < -tol.psd_tol {
            return Err(Error::NotPsd { min_eigenvalue: l });
        }
        let clamped = if l <= zero_band { 0.0 } else { l };
        mapped.push(f(clamped));
    }
    // V diag(f(λ)) V†
    let mut scaled = v.clone();
    for (j, &value) in mapped.iter().enumerate() {
        for i in 0..n {
            scaled.set(i, j, v.get(i, j) * Complex64::new(value, 0.0));
        }
    }
    Ok(scaled.mul(&v.adjoint()))
}
