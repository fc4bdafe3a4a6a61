//! Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! Accuracy, not speed, is the point: matrices here are at most 16x16 and
//! the contract is the reconstruction residual `m = V diag(λ) V†`.

use num_complex::Complex64;

use super::{ComplexMatrix, Tolerances};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and a unitary matrix whose columns
/// are the matching eigenvectors, so that `m = V diag(λ) V†`.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &Tolerances) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!(
            "eigendecomposition of {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let residual = m.hermitian_residual();
    if residual > tol.hermitian_tol {
        return Err(Error::NotHermitian {
            residual,
            tol: tol.hermitian_tol,
        });
    }

    let n = m.rows();
    // Work on the exactly-Hermitian part so roundoff in the input cannot leak
    // imaginary components onto the diagonal.
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let target = f64::EPSILON * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok((eigenvalues, vectors))
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += 2.0 * a.get(i, j).norm_sqr();
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing a[p][q].
///
/// The 2x2 pivot block [[α, r·e^{iφ}], [r·e^{-iφ}, β]] is first rephased to a
/// real symmetric block and then rotated by the classic angle choice, giving
/// the unitary U with u_pp = c, u_pq = s, u_qp = -s·e^{-iφ}, u_qq = c·e^{-iφ}.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{iφ}
    let alpha = a.get(p, p).re;
    let beta = a.get(q, q).re;
    let tau = (beta - alpha) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -s * phase.conj();
    let u_qq = c * phase.conj();

    let n = a.rows();
    // A ← A · U (columns p, q of every row)
    for i in 0..n {
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, aip * u_pp + aiq * u_qp);
        a.set(i, q, aip * u_pq + aiq * u_qq);
    }
    // A ← U† · A (rows p, q of every column)
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, u_pp.conj() * apj + u_qp.conj() * aqj);
        a.set(q, j, u_pq.conj() * apj + u_qq.conj() * aqj);
    }
    // Pin the pivot to its exact post-rotation form.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
    a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

    // V ← V · U
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, vip * u_pp + viq * u_qp);
        v.set(i, q, vip * u_pq + viq * u_qq);
    }
}

#[cfg(test)]
mod tests {
    use super::super::{random_hermitian, ComplexMatrix, Tolerances};
    use super::*;

    fn reconstruct(lambda: &[f64], v: &ComplexMatrix) -> ComplexMatrix {
        v.mul(&ComplexMatrix::diag(lambda)).mul(&v.adjoint())
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let tol = Tolerances::default();
        let (lambda, _) = hermitian_eig(&ComplexMatrix::diag(&[2.0, 1.0]), &tol).unwrap();
        assert_eq!(lambda, vec![1.0, 2.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        // Characteristic polynomial of X is λ² - 1, so λ = ∓1.
        let tol = Tolerances::default();
        let x =
            ComplexMatrix::from_rows(&[vec![(0.0, 0.0), (1.0, 0.0)], vec![(1.0, 0.0), (0.0, 0.0)]]);
        let (lambda, v) = hermitian_eig(&x, &tol).unwrap();
        assert!((lambda[0] + 1.0).abs() < 1e-14);
        assert!((lambda[1] - 1.0).abs() < 1e-14);
        assert!(reconstruct(&lambda, &v).approx_eq(&x, 1e-13));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let tol = Tolerances::default();
        for seed in 0..10u64 {
            for dim in [2usize, 3, 4, 6, 8, 12, 16] {
                let m = random_hermitian(dim, 500 + seed * 31 + dim as u64);
                let (lambda, v) = hermitian_eig(&m, &tol).unwrap();
                // Resynthesis oracle: V diag(λ) V† must reproduce m.
                assert!(
                    reconstruct(&lambda, &v).approx_eq(&m, 1e-11),
                    "residual too large at dim {dim} seed {seed}"
                );
                // V unitary.
                assert!(v
                    .adjoint()
                    .mul(&v)
                    .approx_eq(&ComplexMatrix::identity(dim), 1e-12));
                // Ascending order.
                assert!(lambda.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn degenerate_spectra_reconstruct() {
        let tol = Tolerances::default();
        // Fully degenerate.
        let id = ComplexMatrix::scaled_identity(4, 0.25);
        let (lambda, v) = hermitian_eig(&id, &tol).unwrap();
        assert!(lambda.iter().all(|&l| (l - 0.25).abs() < 1e-15));
        assert!(reconstruct(&lambda, &v).approx_eq(&id, 1e-14));
        // Two-fold degenerate eigenvalue inside a random frame.
        let u = super::super::random_unitary(3, 321);
        let m = u
            .mul(&ComplexMatrix::diag(&[1.0, 1.0, 2.0]))
            .mul(&u.adjoint())
            .hermitian_part();
        let (lambda, v) = hermitian_eig(&m, &tol).unwrap();
        assert!((lambda[0] - 1.0).abs() < 1e-12);
        assert!((lambda[1] - 1.0).abs() < 1e-12);
        assert!((lambda[2] - 2.0).abs() < 1e-12);
        assert!(reconstruct(&lambda, &v).approx_eq(&m, 1e-12));
        assert!(v
            .adjoint()
            .mul(&v)
            .approx_eq(&ComplexMatrix::identity(3), 1e-12));
    }

    #[test]
    fn rejects_non_hermitian() {
        let tol = Tolerances::default();
        let m =
            ComplexMatrix::from_rows(&[vec![(0.0, 0.0), (1.0, 0.0)], vec![(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(
            hermitian_eig(&m, &tol),
            Err(crate::error::Error::NotHermitian { .. })
        ));
    }
}
