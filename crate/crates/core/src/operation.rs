//! Completely positive trace-non-increasing maps in Kraus form.
//!
//! Operations are stored as Kraus lists only. Because Kraus lists are not
//! unique, equality of operations is always decided at the map level, by
//! comparing the action on the matrix-unit basis of the input space.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, kron, ComplexMatrix, Keep, Tolerances};

/// CP trace-non-increasing map from a `dim_in` space to a `dim_out` space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl Operation {
    /// Validates shapes and the normalization Σ K†K ≤ I (max eigenvalue at
    /// most 1 + psd_tol).
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvariantViolation {
                object: "Operation",
                reason: "Kraus list must be nonempty",
                residual: 0.0,
            });
        }
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        let op = Operation {
            dim_in,
            dim_out,
            kraus,
        };
        let gram = op.kraus_gram();
        let (lambda, _) = hermitian_eig(&gram, tol)?;
        if let Some(&max) = lambda.last() {
            if max > 1.0 + tol.psd_tol {
                return Err(Error::InvariantViolation {
                    object: "Operation",
                    reason: "Σ K†K exceeds the identity",
                    residual: max - 1.0,
                });
            }
        }
        Ok(op)
    }

    pub fn new_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Self {
        Operation {
            dim_in,
            dim_out,
            kraus,
        }
    }

    /// Identity channel on a `dim` space.
    pub fn identity(dim: usize) -> Self {
        Operation {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// Zero operation (single zero Kraus operator).
    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Operation {
            dim_in,
            dim_out,
            kraus: vec![ComplexMatrix::zeros(dim_out, dim_in)],
        }
    }

    /// Partial-trace channel over one factor of H₁⊗H₂, with Kraus family
    /// {I⊗⟨k|} (keep first) or {⟨k|⊗I} (keep second).
    pub fn trace_out(dim1: usize, dim2: usize, keep: Keep) -> Self {
        match keep {
            Keep::First => {
                let kraus = (0..dim2)
                    .map(|k| {
                        let mut e = ComplexMatrix::zeros(dim1, dim1 * dim2);
                        for i in 0..dim1 {
                            e.set(i, i * dim2 + k, Complex64::new(1.0, 0.0));
                        }
                        e
                    })
                    .collect();
                Operation {
                    dim_in: dim1 * dim2,
                    dim_out: dim1,
                    kraus,
                }
            }
            Keep::Second => {
                let kraus = (0..dim1)
                    .map(|k| {
                        let mut e = ComplexMatrix::zeros(dim2, dim1 * dim2);
                        for j in 0..dim2 {
                            e.set(j, k * dim2 + j, Complex64::new(1.0, 0.0));
                        }
                        e
                    })
                    .collect();
                Operation {
                    dim_in: dim1 * dim2,
                    dim_out: dim2,
                    kraus,
                }
            }
        }
    }

    /// Random channel built from a one-outcome random instrument.
    pub fn random(dim_in: usize, dim_out: usize, n_kraus: usize, seed: u64) -> Self {
        let grid = crate::linalg::random_instrument(dim_in, dim_out, 1, n_kraus, seed)
            .expect("random Kraus normalizer");
        Operation {
            dim_in,
            dim_out,
            kraus: grid.into_iter().next().unwrap(),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Σ K†K on the input space.
    pub fn kraus_gram(&self) -> ComplexMatrix {
        let mut gram = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            gram = gram.add(&k.adjoint().mul(k));
        }
        gram
    }

    /// J(m) = Σ K m K†.
    pub fn apply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.dim_in || m.cols() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "applying {}→{} operation to {}x{}",
                self.dim_in,
                self.dim_out,
                m.rows(),
                m.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = out.add(&k.mul(m).mul(&k.adjoint()));
        }
        Ok(out)
    }

    /// Dual map J*(b) = Σ K† b K, defined by tr[b·J(m)] = tr[J*(b)·m].
    pub fn dual_apply(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.dim_out || b.cols() != self.dim_out {
            return Err(Error::DimMismatch(format!(
                "dual of {}→{} operation on {}x{}",
                self.dim_in,
                self.dim_out,
                b.rows(),
                b.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out = out.add(&k.adjoint().mul(b).mul(k));
        }
        Ok(out)
    }

    /// Measured effect J*(I) = Σ K†K.
    pub fn dual_identity(&self) -> ComplexMatrix {
        self.kraus_gram()
    }

    /// Sequential product: `self` first, then `next`. Kraus operators are all
    /// products J·K with `next`'s operators on the left.
    pub fn compose(&self, next: &Operation) -> Result<Operation> {
        if self.dim_out != next.dim_in {
            return Err(Error::DimMismatch(format!(
                "composing {}→{} with {}→{}",
                self.dim_in, self.dim_out, next.dim_in, next.dim_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for k in &self.kraus {
            for j in &next.kraus {
                kraus.push(j.mul(k));
            }
        }
        Ok(Operation {
            dim_in: self.dim_in,
            dim_out: next.dim_out,
            kraus,
        })
    }

    /// Tensor product with Kraus family {K_i ⊗ J_j}.
    pub fn tensor(&self, other: &Operation) -> Operation {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for k in &self.kraus {
            for j in &other.kraus {
                kraus.push(kron(k, j));
            }
        }
        Operation {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        }
    }

    /// Operation-level sum: concatenated Kraus lists.
    pub fn add(&self, other: &Operation) -> Operation {
        assert_eq!((self.dim_in, self.dim_out), (other.dim_in, other.dim_out));
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Operation {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus,
        }
    }

    /// Scales the map by a nonnegative weight (Kraus operators by √weight).
    pub fn scale(&self, weight: f64) -> Operation {
        assert!(weight >= 0.0, "operation weights must be nonnegative");
        let s = weight.sqrt();
        Operation {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k.scale_re(s)).collect(),
        }
    }

    /// True when Σ K†K = I within eq_tol.
    pub fn is_channel(&self, tol: &Tolerances) -> bool {
        self.kraus_gram()
            .approx_eq(&ComplexMatrix::identity(self.dim_in), tol.eq_tol)
    }

    /// Choi matrix Σ_{ij} E_ij ⊗ J(E_ij), input factor first; PSD for every
    /// Kraus-form operation.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim_in * self.dim_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            // Column vector w[(i, a)] = K[a, i]; the Choi matrix is Σ w·w†.
            let mut w = ComplexMatrix::zeros(n, 1);
            for i in 0..self.dim_in {
                for a in 0..self.dim_out {
                    w.set(i * self.dim_out + a, 0, k.get(a, i));
                }
            }
            choi = choi.add(&crate::linalg::outer(&w, &w));
        }
        choi
    }

    /// Recovers a Kraus list from a Choi matrix by keeping eigenvalues above
    /// psd_tol; rejects with `NotPsd` when the matrix (hence the presented
    /// map) is not completely positive.
    pub fn kraus_from_choi(
        choi: &ComplexMatrix,
        dim_in: usize,
        dim_out: usize,
        tol: &Tolerances,
    ) -> Result<Operation> {
        if choi.rows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::DimMismatch(format!(
                "Choi matrix is {}x{}, expected square of {}",
                choi.rows(),
                choi.cols(),
                dim_in * dim_out
            )));
        }
        let (lambda, v) = hermitian_eig(choi, tol)?;
        if let Some(&min) = lambda.first() {
            if min < -tol.psd_tol {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
        }
        let mut kraus = Vec::new();
        for (idx, &l) in lambda.iter().enumerate() {
            if l <= tol.psd_tol {
                continue;
            }
            let s = l.sqrt();
            let mut k = ComplexMatrix::zeros(dim_out, dim_in);
            for i in 0..dim_in {
                for a in 0..dim_out {
                    k.set(a, i, v.get(i * dim_out + a, idx) * Complex64::new(s, 0.0));
                }
            }
            kraus.push(k);
        }
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(dim_out, dim_in));
        }
        Operation::new(dim_in, dim_out, kraus, tol)
    }

    /// Max-entry distance between the two maps on the matrix-unit basis;
    /// infinite if the spaces differ.
    pub fn map_distance(&self, other: &Operation) -> f64 {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let unit = ComplexMatrix::matrix_unit(self.dim_in, self.dim_in, i, j);
                let a = self.apply(&unit).expect("dims checked");
                let b = other.apply(&unit).expect("dims checked");
                worst = worst.max(a.max_abs_diff(&b));
            }
        }
        worst
    }
}

/// Choi matrix of an arbitrary linear map presented by its images of the
/// matrix units: `images[i*dim_in + j] = L(E_ij)`. Used to test complete
/// positivity of maps that are not given in Kraus form.
pub fn choi_of_map_images(
    images: &[ComplexMatrix],
    dim_in: usize,
    dim_out: usize,
) -> Result<ComplexMatrix> {
    if images.len() != dim_in * dim_in {
        return Err(Error::DimMismatch(format!(
            "need {} images of matrix units, got {}",
            dim_in * dim_in,
            images.len()
        )));
    }
    let n = dim_in * dim_out;
    let mut choi = ComplexMatrix::zeros(n, n);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let img = &images[i * dim_in + j];
            if img.rows() != dim_out || img.cols() != dim_out {
                return Err(Error::DimMismatch(format!(
                    "image of E_{i}{j} is {}x{}, expected {dim_out}x{dim_out}",
                    img.rows(),
                    img.cols()
                )));
            }
            for a in 0..dim_out {
                for b in 0..dim_out {
                    let prev = choi.get(i * dim_out + a, j * dim_out + b);
                    choi.set(i * dim_out + a, j * dim_out + b, prev + img.get(a, b));
                }
            }
        }
    }
    Ok(choi)
}

/// ρ ↦ op(ρ) ⊗ c for a fixed PSD matrix c: Kraus family {K_i ⊗ √p_m·v_m}
/// over the spectral decomposition of c.
pub fn tensor_with_fixed(op: &Operation, c: &ComplexMatrix, tol: &Tolerances) -> Result<Operation> {
    let columns = psd_spectral_columns(c, tol)?;
    if columns.is_empty() {
        return Ok(Operation::zero(op.dim_in(), op.dim_out() * c.rows()));
    }
    let mut kraus = Vec::with_capacity(op.kraus().len() * columns.len());
    for k in op.kraus() {
        for col in &columns {
            kraus.push(kron(k, col));
        }
    }
    Ok(Operation::new_unchecked(
        op.dim_in(),
        op.dim_out() * c.rows(),
        kraus,
    ))
}

/// ρ ↦ c ⊗ op(ρ), the mirror image of [`tensor_with_fixed`].
pub fn fixed_tensor_with(c: &ComplexMatrix, op: &Operation, tol: &Tolerances) -> Result<Operation> {
    let columns = psd_spectral_columns(c, tol)?;
    if columns.is_empty() {
        return Ok(Operation::zero(op.dim_in(), c.rows() * op.dim_out()));
    }
    let mut kraus = Vec::with_capacity(op.kraus().len() * columns.len());
    for col in &columns {
        for k in op.kraus() {
            kraus.push(kron(col, k));
        }
    }
    Ok(Operation::new_unchecked(
        op.dim_in(),
        c.rows() * op.dim_out(),
        kraus,
    ))
}

/// Columns √p_m·v_m of the spectral decomposition of a PSD matrix.
fn psd_spectral_columns(c: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<ComplexMatrix>> {
    let (lambda, v) = hermitian_eig(c, tol)?;
    if let Some(&min) = lambda.first() {
        if min < -tol.psd_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let mut columns = Vec::new();
    for (idx, &l) in lambda.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let s = l.sqrt();
        let mut col = ComplexMatrix::zeros(c.rows(), 1);
        for i in 0..c.rows() {
            col.set(i, 0, v.get(i, idx) * Complex64::new(s, 0.0));
        }
        columns.push(col);
    }
    Ok(columns)
}
