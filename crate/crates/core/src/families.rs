//! Named instrument families: Holevo, Kraus, Lüders and trivial instruments,
//! their closed-form compositions, and structure detectors.
//!
//! The closed forms double as oracles for the generic combinators: every
//! composition law here must agree with the corresponding generic
//! construction at the map level.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instrument::{BiInstrument, Instrument};
use crate::linalg::{self, hermitian_eig, psd_sqrt, ComplexMatrix, Tolerances};
use crate::objects::{BiObservable, Effect, Observable, State};
use crate::operation::{fixed_tensor_with, tensor_with_fixed, Operation};

/// Data of a Holevo instrument ρ ↦ tr(ρ·A_x)·α_x: an observable on the input
/// space and one output state per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoSpec {
    observable: Observable,
    states: Vec<State>,
}

impl HolevoSpec {
    pub fn new(observable: Observable, states: Vec<State>) -> Result<Self> {
        if states.len() != observable.len() {
            return Err(Error::LabelMismatch(format!(
                "{} states for {} outcomes",
                states.len(),
                observable.len()
            )));
        }
        let dim_out = states[0].dim();
        if states.iter().any(|s| s.dim() != dim_out) {
            return Err(Error::DimMismatch(
                "Holevo states must share one space".into(),
            ));
        }
        Ok(HolevoSpec { observable, states })
    }

    pub fn random(dim_in: usize, dim_out: usize, n_outcomes: usize, seed: u64) -> Result<Self> {
        let observable = Observable::random(dim_in, n_outcomes, seed)?;
        let states = (0..n_outcomes)
            .map(|k| State::random(dim_out, seed.wrapping_add(1 + k as u64)))
            .collect();
        HolevoSpec::new(observable, states)
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn dim_in(&self) -> usize {
        self.observable.dim()
    }

    pub fn dim_out(&self) -> usize {
        self.states[0].dim()
    }

    /// Kraus realization: for A_x = Σ_k a_k|u_k⟩⟨u_k| and α_x = Σ_m
    /// p_m|v_m⟩⟨v_m| the outcome operation has Kraus operators
    /// √(a_k·p_m)·|v_m⟩⟨u_k|, reproducing ρ ↦ tr(ρA_x)·α_x exactly.
    pub fn to_instrument(&self, tol: &Tolerances) -> Result<Instrument> {
        let outcomes = self
            .observable
            .outcomes()
            .iter()
            .zip(&self.states)
            .map(|((label, effect), state)| {
                holevo_outcome_operation(effect.matrix(), state.matrix(), tol)
                    .map(|op| (label.clone(), op))
            })
            .collect::<Result<Vec<_>>>()?;
        Instrument::new(outcomes, tol)
    }
}

/// Kraus realization of one Holevo outcome ρ ↦ tr(ρ·effect)·target.
fn holevo_outcome_operation(
    effect: &ComplexMatrix,
    target: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<Operation> {
    let dim_in = effect.rows();
    let dim_out = target.rows();
    let (a, u) = hermitian_eig(effect, tol)?;
    let (p, v) = hermitian_eig(target, tol)?;
    let mut kraus = Vec::new();
    for (k, &ak) in a.iter().enumerate() {
        if ak < -tol.psd_tol {
            return Err(Error::NotPsd { min_eigenvalue: ak });
        }
        if ak <= 0.0 {
            continue;
        }
        for (m, &pm) in p.iter().enumerate() {
            if pm < -tol.psd_tol {
                return Err(Error::NotPsd { min_eigenvalue: pm });
            }
            if pm <= 0.0 {
                continue;
            }
            let scale = (ak * pm).sqrt();
            let mut op = ComplexMatrix::zeros(dim_out, dim_in);
            for r in 0..dim_out {
                for c in 0..dim_in {
                    op.set(
                        r,
                        c,
                        v.get(r, m) * u.get(c, k).conj() * Complex64::new(scale, 0.0),
                    );
                }
            }
            kraus.push(op);
        }
    }
    if kraus.is_empty() {
        return Ok(Operation::zero(dim_in, dim_out));
    }
    Ok(Operation::new_unchecked(dim_in, dim_out, kraus))
}

/// Data of a Kraus instrument: one operator per outcome with Σ K†K = I.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSpec {
    dim_in: usize,
    dim_out: usize,
    operators: Vec<(String, ComplexMatrix)>,
}

impl KrausSpec {
    pub fn new(operators: Vec<(String, ComplexMatrix)>, tol: &Tolerances) -> Result<Self> {
        let (dim_out, dim_in) = match operators.first() {
            Some((_, k)) => (k.rows(), k.cols()),
            None => {
                return Err(Error::InvariantViolation {
                    object: "KrausSpec",
                    reason: "must have at least one outcome",
                    residual: 0.0,
                })
            }
        };
        let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
        for (label, k) in &operators {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "operator `{label}` is {}x{}, expected {dim_out}x{dim_in}",
                    k.rows(),
                    k.cols()
                )));
            }
            gram = gram.add(&k.adjoint().mul(k));
        }
        let residual = gram.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if residual > tol.eq_tol {
            return Err(Error::InvariantViolation {
                object: "KrausSpec",
                reason: "operators must satisfy Σ K†K = I",
                residual,
            });
        }
        Ok(KrausSpec {
            dim_in,
            dim_out,
            operators,
        })
    }

    pub fn random(dim_in: usize, dim_out: usize, n_outcomes: usize, seed: u64) -> Result<Self> {
        let grid = linalg::random_instrument(dim_in, dim_out, n_outcomes, 1, seed)?;
        let operators = grid
            .into_iter()
            .enumerate()
            .map(|(x, mut kraus)| (x.to_string(), kraus.remove(0)))
            .collect();
        KrausSpec::new(operators, &Tolerances::default())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn operators(&self) -> &[(String, ComplexMatrix)] {
        &self.operators
    }

    pub fn to_instrument(&self, tol: &Tolerances) -> Result<Instrument> {
        let outcomes = self
            .operators
            .iter()
            .map(|(label, k)| {
                (
                    label.clone(),
                    Operation::new_unchecked(self.dim_in, self.dim_out, vec![k.clone()]),
                )
            })
            .collect();
        Instrument::new(outcomes, tol)
    }
}

/// Lüders instrument of an observable: Kraus operators A_x^{1/2}.
pub fn lueders(a: &Observable, tol: &Tolerances) -> Result<Instrument> {
    let outcomes = a
        .outcomes()
        .iter()
        .map(|(label, effect)| {
            psd_sqrt(effect.matrix(), tol).map(|root| {
                (
                    label.clone(),
                    Operation::new_unchecked(a.dim(), a.dim(), vec![root]),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(outcomes, tol)
}

/// Trivial instrument J_y(ρ) = β_y, realized as the Holevo instrument with
/// identity-observable effects tr(β_y)·I and states β_y/tr(β_y); a zero β_y
/// becomes a zero operation.
pub fn trivial(
    dim_in: usize,
    betas: &[(String, ComplexMatrix)],
    tol: &Tolerances,
) -> Result<Instrument> {
    if betas.is_empty() {
        return Err(Error::InvariantViolation {
            object: "trivial instrument",
            reason: "must have at least one outcome",
            residual: 0.0,
        });
    }
    let dim_out = betas[0].1.rows();
    let mut total_trace = 0.0;
    for (label, beta) in betas {
        if beta.rows() != dim_out || !beta.is_square() {
            return Err(Error::DimMismatch(format!(
                "output `{label}` is {}x{}, expected {dim_out}x{dim_out}",
                beta.rows(),
                beta.cols()
            )));
        }
        let (lambda, _) = hermitian_eig(beta, tol)?;
        if let Some(&min) = lambda.first() {
            if min < -tol.psd_tol {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
        }
        total_trace += beta.trace().re;
    }
    if (total_trace - 1.0).abs() > tol.trace_tol {
        return Err(Error::InvariantViolation {
            object: "trivial instrument",
            reason: "outputs must sum to a unit-trace state",
            residual: (total_trace - 1.0).abs(),
        });
    }
    let outcomes = betas
        .iter()
        .map(|(label, beta)| {
            let t = beta.trace().re;
            let op = if t <= 0.0 {
                Operation::zero(dim_in, dim_out)
            } else {
                holevo_outcome_operation(
                    &ComplexMatrix::scaled_identity(dim_in, t),
                    &beta.scale_re(1.0 / t),
                    tol,
                )?
            };
            Ok((label.clone(), op))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(outcomes, tol)
}

/// A Holevo bi-instrument: a bi-observable with one output state per cell.
/// Cells whose state is `None` carry (numerically) zero effects and realize
/// zero operations.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoBiSpec {
    pub biobservable: BiObservable,
    /// Row-major over (x, y), parallel to the bi-observable grid.
    pub states: Vec<Option<State>>,
}

impl HolevoBiSpec {
    pub fn to_bi_instrument(&self, tol: &Tolerances) -> Result<BiInstrument> {
        let dim_in = self.biobservable.dim();
        let dim_out = self.states.iter().flatten().map(State::dim).next().ok_or(
            Error::InvariantViolation {
                object: "HolevoBiSpec",
                reason: "needs at least one defined output state",
                residual: 0.0,
            },
        )?;
        let grid = self
            .biobservable
            .grid()
            .iter()
            .zip(&self.states)
            .map(|(effect, state)| match state {
                Some(s) => holevo_outcome_operation(effect.matrix(), s.matrix(), tol),
                None => Ok(Operation::zero(dim_in, dim_out)),
            })
            .collect::<Result<Vec<_>>>()?;
        BiInstrument::new(
            self.biobservable.labels1().to_vec(),
            self.biobservable.labels2().to_vec(),
            grid,
            tol,
        )
    }
}

/// Closed form for H^{(A,α)} ∘ H^{(B,β)} = H^{(C,β)} with
/// C_xy = tr(α_x·B_y)·A_x.
pub fn holevo_compose_closed_form(
    h1: &HolevoSpec,
    h2: &HolevoSpec,
    tol: &Tolerances,
) -> Result<HolevoBiSpec> {
    if h1.dim_out() != h2.dim_in() {
        return Err(Error::DimMismatch(format!(
            "Holevo chain {}→{} then {}→{}",
            h1.dim_in(),
            h1.dim_out(),
            h2.dim_in(),
            h2.dim_out()
        )));
    }
    let mut grid = Vec::new();
    let mut states = Vec::new();
    for ((_, a_x), alpha_x) in h1.observable().outcomes().iter().zip(h1.states()) {
        for ((_, b_y), beta_y) in h2.observable().outcomes().iter().zip(h2.states()) {
            let weight = alpha_x.matrix().mul(b_y.matrix()).trace().re;
            grid.push(Effect::new_unchecked(a_x.matrix().scale_re(weight)));
            states.push(Some(beta_y.clone()));
        }
    }
    let biobservable = BiObservable::new(
        h1.observable().labels().map(str::to_owned).collect(),
        h2.observable().labels().map(str::to_owned).collect(),
        grid,
        tol,
    )?;
    Ok(HolevoBiSpec {
        biobservable,
        states,
    })
}

/// Closed form for K ∘ H^{(A,α)} = H^{(B,α)} with B_xy = K_x*(A_y): an
/// arbitrary instrument followed by a Holevo one is Holevo.
pub fn arbitrary_then_holevo(
    k: &Instrument,
    h: &HolevoSpec,
    tol: &Tolerances,
) -> Result<HolevoBiSpec> {
    if k.dim_out() != h.dim_in() {
        return Err(Error::DimMismatch(format!(
            "chain {}→{} then Holevo on {}",
            k.dim_in(),
            k.dim_out(),
            h.dim_in()
        )));
    }
    let mut grid = Vec::new();
    let mut states = Vec::new();
    for (_, op_x) in k.outcomes() {
        for ((_, a_y), alpha_y) in h.observable().outcomes().iter().zip(h.states()) {
            grid.push(Effect::new(op_x.dual_apply(a_y.matrix())?, tol)?);
            states.push(Some(alpha_y.clone()));
        }
    }
    let biobservable = BiObservable::new(
        k.labels().map(str::to_owned).collect(),
        h.observable().labels().map(str::to_owned).collect(),
        grid,
        tol,
    )?;
    Ok(HolevoBiSpec {
        biobservable,
        states,
    })
}

/// Closed form for H^{(A,α)} ∘ K = H^{(B,β)} with B_xy = tr[K_y(α_x)]·A_x and
/// β_xy = K_y(α_x)/tr[K_y(α_x)]; cells with K_y(α_x) = 0 carry zero
/// operations and an undefined state.
pub fn holevo_then_arbitrary(
    h: &HolevoSpec,
    k: &Instrument,
    tol: &Tolerances,
) -> Result<HolevoBiSpec> {
    if h.dim_out() != k.dim_in() {
        return Err(Error::DimMismatch(format!(
            "Holevo into {} then instrument {}→{}",
            h.dim_out(),
            k.dim_in(),
            k.dim_out()
        )));
    }
    let mut grid = Vec::new();
    let mut states = Vec::new();
    for ((_, a_x), alpha_x) in h.observable().outcomes().iter().zip(h.states()) {
        for (_, op_y) in k.outcomes() {
            let image = op_y.apply(alpha_x.matrix())?;
            let weight = image.trace().re;
            grid.push(Effect::new_unchecked(a_x.matrix().scale_re(weight)));
            if weight <= tol.psd_tol {
                states.push(None);
            } else {
                states.push(Some(State::new(image.scale_re(1.0 / weight), tol)?));
            }
        }
    }
    let biobservable = BiObservable::new(
        h.observable().labels().map(str::to_owned).collect(),
        k.labels().map(str::to_owned).collect(),
        grid,
        tol,
    )?;
    Ok(HolevoBiSpec {
        biobservable,
        states,
    })
}

/// Convex combination of Holevo specs sharing their output states:
/// Σ λ_i·H^{(A_i,α)} = H^{(Σλ_i·A_i, α)}.
pub fn convex_holevo(
    specs: &[HolevoSpec],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<HolevoSpec> {
    if specs.is_empty() || specs.len() != weights.len() {
        return Err(Error::BadWeights(format!(
            "{} weights for {} specs",
            weights.len(),
            specs.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::BadWeights("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol.trace_tol {
        return Err(Error::BadWeights(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let first = &specs[0];
    for spec in &specs[1..] {
        if spec.observable().len() != first.observable().len()
            || !spec
                .observable()
                .labels()
                .zip(first.observable().labels())
                .all(|(a, b)| a == b)
        {
            return Err(Error::LabelMismatch(
                "specs must share the outcome space".into(),
            ));
        }
        let worst = spec
            .states()
            .iter()
            .zip(first.states())
            .map(|(a, b)| a.matrix().max_abs_diff(b.matrix()))
            .fold(0.0, f64::max);
        if worst > tol.eq_tol {
            return Err(Error::StateMismatch(worst));
        }
    }
    let outcomes = first
        .observable()
        .labels()
        .enumerate()
        .map(|(x, label)| {
            let mut acc = ComplexMatrix::zeros(first.dim_in(), first.dim_in());
            for (spec, &w) in specs.iter().zip(weights) {
                acc = acc.add(&spec.observable().outcomes()[x].1.matrix().scale_re(w));
            }
            (label.to_owned(), Effect::new_unchecked(acc))
        })
        .collect();
    HolevoSpec::new(Observable::new(outcomes, tol)?, first.states().to_vec())
}

/// The state formula for a convex combination of Holevo instruments with
/// per-spec states: when Σ λ_i·H^{(A_i,α_i)} happens to be Holevo, its states
/// are β_x = Σ_i λ_i·tr(A_ix)·α_ix / Σ_i λ_i·tr(A_ix). `None` marks outcomes
/// where the denominator vanishes.
pub fn holevo_mixture_states(
    specs: &[HolevoSpec],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<Vec<Option<State>>> {
    if specs.is_empty() || specs.len() != weights.len() {
        return Err(Error::BadWeights(format!(
            "{} weights for {} specs",
            weights.len(),
            specs.len()
        )));
    }
    let n_outcomes = specs[0].observable().len();
    let dim_out = specs[0].dim_out();
    let mut out = Vec::with_capacity(n_outcomes);
    for x in 0..n_outcomes {
        let mut numerator = ComplexMatrix::zeros(dim_out, dim_out);
        let mut denominator = 0.0;
        for (spec, &w) in specs.iter().zip(weights) {
            let trace = spec.observable().outcomes()[x].1.matrix().trace().re;
            numerator = numerator.add(&spec.states()[x].matrix().scale_re(w * trace));
            denominator += w * trace;
        }
        if denominator <= tol.psd_tol {
            out.push(None);
        } else {
            out.push(Some(State::new(
                numerator.scale_re(1.0 / denominator),
                tol,
            )?));
        }
    }
    Ok(out)
}

/// Recognizes Holevo structure: returns (A, α) with A the measured observable
/// and α_x = I_x(I/n)/tr[I_x(I/n)], provided I_x(E_jk) = tr(E_jk·A_x)·α_x on
/// every matrix unit. Outcomes with A_x = 0 are unconstrained and get the
/// maximally mixed state.
pub fn detect_holevo(instrument: &Instrument, tol: &Tolerances) -> Option<HolevoSpec> {
    let observable = instrument.measured_observable(tol).ok()?;
    let dim_in = instrument.dim_in();
    let dim_out = instrument.dim_out();
    let mixed = ComplexMatrix::scaled_identity(dim_in, 1.0 / dim_in as f64);
    let mut states = Vec::with_capacity(instrument.len());
    for ((_, op), (_, effect)) in instrument.outcomes().iter().zip(observable.outcomes()) {
        if effect.matrix().max_abs_entry() <= tol.eq_tol {
            states.push(State::maximally_mixed(dim_out));
            continue;
        }
        let image = op.apply(&mixed).ok()?;
        let weight = image.trace().re;
        if weight <= tol.psd_tol {
            return None;
        }
        let alpha = image.scale_re(1.0 / weight);
        for j in 0..dim_in {
            for k in 0..dim_in {
                let unit = ComplexMatrix::matrix_unit(dim_in, dim_in, j, k);
                let got = op.apply(&unit).ok()?;
                // tr(E_jk·A_x) = A_x[k, j]
                let want = alpha.scale(effect.matrix().get(k, j));
                if got.max_abs_diff(&want) > tol.eq_tol {
                    return None;
                }
            }
        }
        states.push(State::new(alpha, tol).ok()?);
    }
    HolevoSpec::new(observable, states).ok()
}

/// Recognizes Kraus structure via the Choi rank: present iff every outcome's
/// Choi matrix has rank one (all eigenvalues beyond the largest at most
/// psd_tol). The recovered operator is fixed only up to a global phase.
pub fn detect_kraus(instrument: &Instrument, tol: &Tolerances) -> Option<KrausSpec> {
    let dim_in = instrument.dim_in();
    let dim_out = instrument.dim_out();
    let mut operators = Vec::with_capacity(instrument.len());
    for (label, op) in instrument.outcomes() {
        let choi = op.choi();
        let (lambda, v) = hermitian_eig(&choi, tol).ok()?;
        let n = lambda.len();
        if n >= 2 && lambda[n - 2] > tol.psd_tol {
            return None;
        }
        let top = lambda[n - 1];
        let mut kraus = ComplexMatrix::zeros(dim_out, dim_in);
        if top > tol.psd_tol {
            let s = top.sqrt();
            for i in 0..dim_in {
                for a in 0..dim_out {
                    kraus.set(a, i, v.get(i * dim_out + a, n - 1) * Complex64::new(s, 0.0));
                }
            }
        }
        operators.push((label.clone(), kraus));
    }
    KrausSpec::new(operators, tol).ok()
}

/// Convex tensor product K_{xy}(ρ) = λ_y·I_x(ρ)⊗β_y + μ_x·α_x⊗J_y(ρ).
pub fn convex_tensor_product(
    i: &Instrument,
    j: &Instrument,
    alphas: &[State],
    betas: &[State],
    lambda_y: &[f64],
    mu_x: &[f64],
    tol: &Tolerances,
) -> Result<BiInstrument> {
    if i.dim_in() != j.dim_in() {
        return Err(Error::DimMismatch(format!(
            "instruments share the input space: {} vs {}",
            i.dim_in(),
            j.dim_in()
        )));
    }
    if alphas.len() != i.len() || mu_x.len() != i.len() {
        return Err(Error::BadWeights(format!(
            "need {} states α and weights μ, got {} and {}",
            i.len(),
            alphas.len(),
            mu_x.len()
        )));
    }
    if betas.len() != j.len() || lambda_y.len() != j.len() {
        return Err(Error::BadWeights(format!(
            "need {} states β and weights λ, got {} and {}",
            j.len(),
            betas.len(),
            lambda_y.len()
        )));
    }
    if lambda_y.iter().chain(mu_x).any(|&w| w < 0.0) {
        return Err(Error::BadWeights("weights must be nonnegative".into()));
    }
    let total: f64 = lambda_y.iter().sum::<f64>() + mu_x.iter().sum::<f64>();
    if (total - 1.0).abs() > tol.trace_tol {
        return Err(Error::BadWeights(format!(
            "Σλ + Σμ sums to {total}, expected 1"
        )));
    }
    let mut grid = Vec::with_capacity(i.len() * j.len());
    for ((_, op_x), (alpha_x, &mu)) in i.outcomes().iter().zip(alphas.iter().zip(mu_x)) {
        for ((_, op_y), (beta_y, &lambda)) in j.outcomes().iter().zip(betas.iter().zip(lambda_y)) {
            let left = tensor_with_fixed(op_x, &beta_y.matrix().scale_re(lambda), tol)?;
            let right = fixed_tensor_with(&alpha_x.matrix().scale_re(mu), op_y, tol)?;
            grid.push(left.add(&right));
        }
    }
    BiInstrument::new(
        i.labels().map(str::to_owned).collect(),
        j.labels().map(str::to_owned).collect(),
        grid,
        tol,
    )
}
