//! Seeded generators for test inputs: states, POVMs, Kraus grids.
//!
//! Everything is a pure function of the seed (ChaCha8 stream), so identical
//! seeds reproduce bit-identical output.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{inv_sqrt_psd, ComplexMatrix, Tolerances};
use crate::error::Result;

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            // Box-Muller keeps the stream layout explicit and platform-stable.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let radius = (-2.0 * u1.ln()).sqrt();
            m.set(i, j, Complex64::new(radius * u2.cos(), radius * u2.sin()));
        }
    }
    m
}

/// Random density operator: G·G† normalized to unit trace.
pub fn random_state(dim: usize, seed: u64) -> ComplexMatrix {
    assert!(dim >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(dim, dim, &mut rng);
    let gram = g.mul(&g.adjoint());
    let trace = gram.trace().re;
    gram.scale_re(1.0 / trace)
}

/// Random Hermitian matrix (G + G†)/2 with Gaussian entries.
pub fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    assert!(dim >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gaussian_matrix(dim, dim, &mut rng).hermitian_part()
}

/// Random unitary: eigenvector matrix of a random Hermitian matrix.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let tol = Tolerances::default();
    let h = random_hermitian(dim, seed);
    let (_, v) = super::hermitian_eig(&h, &tol).expect("random Hermitian matrix");
    v
}

/// Random POVM: PSD samples P_x whitened by S^{-1/2} with S = ΣP_x.
pub fn random_povm(dim: usize, n_outcomes: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    assert!(dim >= 1 && n_outcomes >= 1);
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<ComplexMatrix> = (0..n_outcomes)
        .map(|_| {
            let g = gaussian_matrix(dim, dim, &mut rng);
            g.mul(&g.adjoint())
        })
        .collect();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for p in &samples {
        total = total.add(p);
    }
    let w = inv_sqrt_psd(&total, &tol)?;
    Ok(samples.iter().map(|p| w.mul(p).mul(&w)).collect())
}

/// Random instrument as a Kraus-operator grid, `n_outcomes` outcomes with
/// `kraus_per_outcome` operators each, whitened so the summed operation is a
/// channel: K_{x,i} = G_{x,i}·S^{-1/2} with S = Σ G†G.
pub fn random_instrument(
    dim_in: usize,
    dim_out: usize,
    n_outcomes: usize,
    kraus_per_outcome: usize,
    seed: u64,
) -> Result<Vec<Vec<ComplexMatrix>>> {
    assert!(dim_in >= 1 && dim_out >= 1 && n_outcomes >= 1 && kraus_per_outcome >= 1);
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<Vec<ComplexMatrix>> = (0..n_outcomes)
        .map(|_| {
            (0..kraus_per_outcome)
                .map(|_| gaussian_matrix(dim_out, dim_in, &mut rng))
                .collect()
        })
        .collect();
    let mut s = ComplexMatrix::zeros(dim_in, dim_in);
    for outcome in &blocks {
        for g in outcome {
            s = s.add(&g.adjoint().mul(g));
        }
    }
    let w = inv_sqrt_psd(&s, &tol)?;
    Ok(blocks
        .iter()
        .map(|outcome| outcome.iter().map(|g| g.mul(&w)).collect())
        .collect())
}
