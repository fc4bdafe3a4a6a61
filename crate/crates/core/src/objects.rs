//! States, effects, observables (POVMs) and bi-observables.
//!
//! Validation happens at construction against explicit [`Tolerances`]; the
//! `new_unchecked` constructors exist for internal composition results that
//! are re-validated at module boundaries.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, ComplexMatrix, Tolerances};

/// Which index of a bi-labeled object a marginal keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    /// Keep the first label, sum over the second.
    First,
    /// Keep the second label, sum over the first.
    Second,
}

/// Density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    dim: usize,
    mat: ComplexMatrix,
}

impl State {
    pub fn new(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch(format!(
                "state must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let herm = mat.hermitian_residual();
        if herm > tol.hermitian_tol {
            return Err(Error::NotHermitian {
                residual: herm,
                tol: tol.hermitian_tol,
            });
        }
        let (lambda, _) = hermitian_eig(&mat, tol)?;
        if let Some(&min) = lambda.first() {
            if min < -tol.psd_tol {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
        }
        let trace_dev = (mat.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > tol.trace_tol {
            return Err(Error::InvariantViolation {
                object: "State",
                reason: "trace must equal one",
                residual: trace_dev,
            });
        }
        Ok(State {
            dim: mat.rows(),
            mat,
        })
    }

    pub fn new_unchecked(mat: ComplexMatrix) -> Self {
        State {
            dim: mat.rows(),
            mat,
        }
    }

    /// I/n.
    pub fn maximally_mixed(dim: usize) -> Self {
        State::new_unchecked(ComplexMatrix::scaled_identity(dim, 1.0 / dim as f64))
    }

    /// Pure state |v⟩⟨v| from a column vector, normalized.
    pub fn pure(v: &ComplexMatrix) -> Self {
        let norm_sqr: f64 = v.entries().iter().map(|e| e.norm_sqr()).sum();
        State::new_unchecked(linalg::outer(v, v).scale_re(1.0 / norm_sqr))
    }

    /// Basis projector |k⟩⟨k|.
    pub fn pure_basis(dim: usize, k: usize) -> Self {
        State::pure(&ComplexMatrix::basis_column(dim, k))
    }

    pub fn random(dim: usize, seed: u64) -> Self {
        State::new_unchecked(linalg::random_state(dim, seed))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// Effect: Hermitian with spectrum in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    dim: usize,
    mat: ComplexMatrix,
}

impl Effect {
    pub fn new(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch(format!(
                "effect must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let herm = mat.hermitian_residual();
        if herm > tol.hermitian_tol {
            return Err(Error::NotHermitian {
                residual: herm,
                tol: tol.hermitian_tol,
            });
        }
        let (lambda, _) = hermitian_eig(&mat, tol)?;
        if let (Some(&min), Some(&max)) = (lambda.first(), lambda.last()) {
            if min < -tol.psd_tol {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
            if max > 1.0 + tol.psd_tol {
                return Err(Error::InvariantViolation {
                    object: "Effect",
                    reason: "eigenvalue exceeds one",
                    residual: max - 1.0,
                });
            }
        }
        Ok(Effect {
            dim: mat.rows(),
            mat,
        })
    }

    pub fn new_unchecked(mat: ComplexMatrix) -> Self {
        Effect {
            dim: mat.rows(),
            mat,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Effect::new_unchecked(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Effect::new_unchecked(ComplexMatrix::identity(dim))
    }

    /// p·I for p in [0, 1].
    pub fn scaled_identity(dim: usize, p: f64) -> Self {
        Effect::new_unchecked(ComplexMatrix::scaled_identity(dim, p))
    }

    /// Complement a′ = I − a, exact.
    pub fn complement(&self) -> Self {
        Effect::new_unchecked(ComplexMatrix::identity(self.dim).sub(&self.mat))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// Observable (POVM): ordered outcome labels with effects summing to I.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    dim: usize,
    outcomes: Vec<(String, Effect)>,
}

impl Observable {
    pub fn new(outcomes: Vec<(String, Effect)>, tol: &Tolerances) -> Result<Self> {
        let dim = match outcomes.first() {
            Some((_, e)) => e.dim(),
            None => {
                return Err(Error::InvariantViolation {
                    object: "Observable",
                    reason: "must have at least one outcome",
                    residual: 0.0,
                })
            }
        };
        for (label, e) in &outcomes {
            if e.dim() != dim {
                return Err(Error::DimMismatch(format!(
                    "effect `{label}` has dim {} instead of {dim}",
                    e.dim()
                )));
            }
        }
        for (i, (label, _)) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelMismatch(format!(
                    "duplicate outcome label `{label}`"
                )));
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (_, e) in &outcomes {
            sum = sum.add(e.matrix());
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > tol.eq_tol {
            return Err(Error::InvariantViolation {
                object: "Observable",
                reason: "effects must sum to the identity",
                residual,
            });
        }
        Ok(Observable { dim, outcomes })
    }

    /// Builds and validates each effect from a raw matrix.
    pub fn from_matrices(outcomes: Vec<(String, ComplexMatrix)>, tol: &Tolerances) -> Result<Self> {
        let effects = outcomes
            .into_iter()
            .map(|(label, m)| Effect::new(m, tol).map(|e| (label, e)))
            .collect::<Result<Vec<_>>>()?;
        Observable::new(effects, tol)
    }

    pub fn new_unchecked(dim: usize, outcomes: Vec<(String, Effect)>) -> Self {
        Observable { dim, outcomes }
    }

    /// Sharp observable of the computational-basis projectors.
    pub fn projective_basis(dim: usize) -> Self {
        let outcomes = (0..dim)
            .map(|k| {
                let col = ComplexMatrix::basis_column(dim, k);
                (
                    k.to_string(),
                    Effect::new_unchecked(linalg::outer(&col, &col)),
                )
            })
            .collect();
        Observable { dim, outcomes }
    }

    pub fn random(dim: usize, n_outcomes: usize, seed: u64) -> Result<Self> {
        let effects = linalg::random_povm(dim, n_outcomes, seed)?;
        let outcomes = effects
            .into_iter()
            .enumerate()
            .map(|(k, m)| (k.to_string(), Effect::new_unchecked(m)))
            .collect();
        Ok(Observable { dim, outcomes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn outcomes(&self) -> &[(String, Effect)] {
        &self.outcomes
    }

    pub fn effect(&self, label: &str) -> Option<&Effect> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, e)| e)
    }

    /// ρ-distribution Φ_ρ(x) = tr(ρ·A_x), clamped to [0, 1].
    pub fn rho_distribution(&self, rho: &State, tol: &Tolerances) -> Result<Vec<(String, f64)>> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch(format!(
                "observable dim {} vs state dim {}",
                self.dim,
                rho.dim()
            )));
        }
        let mut dist = Vec::with_capacity(self.outcomes.len());
        let mut total = 0.0;
        for (label, e) in &self.outcomes {
            let p = rho.matrix().mul(e.matrix()).trace().re;
            if !(-tol.psd_tol..=1.0 + tol.psd_tol).contains(&p) {
                return Err(Error::InvariantViolation {
                    object: "distribution",
                    reason: "probability outside [0, 1]",
                    residual: if p < 0.0 { -p } else { p - 1.0 },
                });
            }
            total += p;
            dist.push((label.clone(), p.clamp(0.0, 1.0)));
        }
        if (total - 1.0).abs() > tol.trace_tol {
            return Err(Error::InvariantViolation {
                object: "distribution",
                reason: "probabilities must sum to one",
                residual: (total - 1.0).abs(),
            });
        }
        Ok(dist)
    }

    /// True when every effect is a projection (A_x² = A_x within eq_tol).
    pub fn is_sharp(&self, tol: &Tolerances) -> bool {
        self.outcomes
            .iter()
            .all(|(_, e)| e.matrix().mul(e.matrix()).max_abs_diff(e.matrix()) <= tol.eq_tol)
    }

    /// Max-entry distance between matching effects; infinite on label mismatch.
    pub fn distance(&self, other: &Observable) -> f64 {
        if self.dim != other.dim
            || self.outcomes.len() != other.outcomes.len()
            || !self
                .outcomes
                .iter()
                .zip(&other.outcomes)
                .all(|((a, _), (b, _))| a == b)
        {
            return f64::INFINITY;
        }
        self.outcomes
            .iter()
            .zip(&other.outcomes)
            .map(|((_, a), (_, b))| a.matrix().max_abs_diff(b.matrix()))
            .fold(0.0, f64::max)
    }
}

/// Observable over a full Cartesian grid of outcome pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BiObservable {
    dim: usize,
    labels1: Vec<String>,
    labels2: Vec<String>,
    /// Row-major over (x, y): index `ix * labels2.len() + iy`.
    grid: Vec<Effect>,
}

impl BiObservable {
    pub fn new(
        labels1: Vec<String>,
        labels2: Vec<String>,
        grid: Vec<Effect>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if labels1.is_empty() || labels2.is_empty() || grid.len() != labels1.len() * labels2.len() {
            return Err(Error::LabelMismatch(format!(
                "grid of {} entries does not cover {}x{} labels",
                grid.len(),
                labels1.len(),
                labels2.len()
            )));
        }
        let dim = grid[0].dim();
        if grid.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimMismatch(
                "grid effects have mixed dimensions".into(),
            ));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &grid {
            sum = sum.add(e.matrix());
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > tol.eq_tol {
            return Err(Error::InvariantViolation {
                object: "BiObservable",
                reason: "grid must sum to the identity",
                residual,
            });
        }
        Ok(BiObservable {
            dim,
            labels1,
            labels2,
            grid,
        })
    }

    pub fn new_unchecked(
        dim: usize,
        labels1: Vec<String>,
        labels2: Vec<String>,
        grid: Vec<Effect>,
    ) -> Self {
        BiObservable {
            dim,
            labels1,
            labels2,
            grid,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels1(&self) -> &[String] {
        &self.labels1
    }

    pub fn labels2(&self) -> &[String] {
        &self.labels2
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> &Effect {
        &self.grid[ix * self.labels2.len() + iy]
    }

    pub fn effect(&self, lx: &str, ly: &str) -> Option<&Effect> {
        let ix = self.labels1.iter().position(|l| l == lx)?;
        let iy = self.labels2.iter().position(|l| l == ly)?;
        Some(self.get(ix, iy))
    }

    pub fn grid(&self) -> &[Effect] {
        &self.grid
    }

    /// Marginal observable: sums the grid along the dropped label axis.
    pub fn marginal(&self, which: Marginal) -> Observable {
        let outcomes = match which {
            Marginal::First => self
                .labels1
                .iter()
                .enumerate()
                .map(|(ix, label)| {
                    let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
                    for iy in 0..self.labels2.len() {
                        sum = sum.add(self.get(ix, iy).matrix());
                    }
                    (label.clone(), Effect::new_unchecked(sum))
                })
                .collect(),
            Marginal::Second => self
                .labels2
                .iter()
                .enumerate()
                .map(|(iy, label)| {
                    let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
                    for ix in 0..self.labels1.len() {
                        sum = sum.add(self.get(ix, iy).matrix());
                    }
                    (label.clone(), Effect::new_unchecked(sum))
                })
                .collect(),
        };
        Observable {
            dim: self.dim,
            outcomes,
        }
    }

    /// Flattens to a single-index observable over joined labels.
    pub fn flatten(&self) -> Observable {
        let outcomes = self
            .labels1
            .iter()
            .enumerate()
            .flat_map(|(ix, lx)| {
                self.labels2.iter().enumerate().map(move |(iy, ly)| {
                    (
                        crate::instrument::join_labels(lx, ly),
                        self.get(ix, iy).clone(),
                    )
                })
            })
            .collect();
        Observable {
            dim: self.dim,
            outcomes,
        }
    }
}

/// Tensor-product bi-observable (A⊗B)_{xy} = A_x ⊗ B_y.
pub fn tensor_biobservable(a: &Observable, b: &Observable) -> BiObservable {
    let labels1: Vec<String> = a.labels().map(str::to_owned).collect();
    let labels2: Vec<String> = b.labels().map(str::to_owned).collect();
    let mut grid = Vec::with_capacity(labels1.len() * labels2.len());
    for (_, ea) in a.outcomes() {
        for (_, eb) in b.outcomes() {
            grid.push(Effect::new_unchecked(linalg::kron(
                ea.matrix(),
                eb.matrix(),
            )));
        }
    }
    BiObservable {
        dim: a.dim() * b.dim(),
        labels1,
        labels2,
        grid,
    }
}

/// Joint bi-observable C_xy = A_x·B_y for pairwise commuting observables.
pub fn commuting_joint(a: &Observable, b: &Observable, tol: &Tolerances) -> Result<BiObservable> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "dims {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut worst = 0.0f64;
    for (_, ea) in a.outcomes() {
        for (_, eb) in b.outcomes() {
            let commutator = ea
                .matrix()
                .mul(eb.matrix())
                .sub(&eb.matrix().mul(ea.matrix()));
            worst = worst.max(commutator.max_abs_entry());
        }
    }
    if worst > tol.eq_tol {
        return Err(Error::NonCommuting(worst));
    }
    let labels1: Vec<String> = a.labels().map(str::to_owned).collect();
    let labels2: Vec<String> = b.labels().map(str::to_owned).collect();
    let mut grid = Vec::with_capacity(labels1.len() * labels2.len());
    for (_, ea) in a.outcomes() {
        for (_, eb) in b.outcomes() {
            grid.push(Effect::new_unchecked(
                ea.matrix().mul(eb.matrix()).hermitian_part(),
            ));
        }
    }
    Ok(BiObservable {
        dim: a.dim(),
        labels1,
        labels2,
        grid,
    })
}

/// Certificate produced by [`verify_joint_biobservable`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointObservableCertificate {
    pub pass: bool,
    pub residual_1: f64,
    pub residual_2: f64,
}

impl JointObservableCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residual_1.max(self.residual_2)
    }
}

/// Checks that `c` is a joint bi-observable for `a` and `b`: both marginals
/// must reproduce the given observables within `eq_tol`.
pub fn verify_joint_biobservable(
    c: &BiObservable,
    a: &Observable,
    b: &Observable,
    tol: &Tolerances,
) -> Result<JointObservableCertificate> {
    let a_labels: Vec<&str> = a.labels().collect();
    let b_labels: Vec<&str> = b.labels().collect();
    if c.labels1() != a_labels.as_slice() || c.labels2() != b_labels.as_slice() {
        return Err(Error::LabelMismatch(
            "joint grid labels must equal the Cartesian product of the marginals'".into(),
        ));
    }
    let residual_1 = c.marginal(Marginal::First).distance(a);
    let residual_2 = c.marginal(Marginal::Second).distance(b);
    Ok(JointObservableCertificate {
        pass: residual_1 <= tol.eq_tol && residual_2 <= tol.eq_tol,
        residual_1,
        residual_2,
    })
}
