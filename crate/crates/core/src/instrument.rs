//! Instruments, bi-instruments and the generic combinators: distributions,
//! state update, measured observables, sequential products, conditioning,
//! marginals, reductions, convex combinations, post-processing and tensor
//! products.
//!
//! Equality of instruments is map-level: equal label sets and operation-wise
//! agreement on the matrix-unit basis, never equality of Kraus lists.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Keep, Tolerances};
use crate::objects::{BiObservable, Effect, Marginal, Observable, State};
use crate::operation::Operation;

/// Joins a pair of outcome labels into one label, reversibly: `⊗` separates
/// the parts, backslash escapes both `⊗` and itself.
pub fn join_labels(first: &str, second: &str) -> String {
    fn escape(s: &str) -> String {
        let mut out = String::with_capacity(s.len());
        for ch in s.chars() {
            if ch == '\\' || ch == '⊗' {
                out.push('\\');
            }
            out.push(ch);
        }
        out
    }
    format!("{}⊗{}", escape(first), escape(second))
}

/// Inverse of [`join_labels`]; `None` if the label is not a joined pair.
pub fn split_label(label: &str) -> Option<(String, String)> {
    let mut first = String::new();
    let mut second = String::new();
    let mut target = &mut first;
    let mut seen_separator = false;
    let mut escaped = false;
    for ch in label.chars() {
        if escaped {
            target.push(ch);
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == '⊗' {
            if seen_separator {
                return None;
            }
            seen_separator = true;
            target = &mut second;
        } else {
            target.push(ch);
        }
    }
    if seen_separator && !escaped {
        Some((first, second))
    } else {
        None
    }
}

/// Outcome-labeled family of operations whose sum is a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    dim_in: usize,
    dim_out: usize,
    outcomes: Vec<(String, Operation)>,
}

impl Instrument {
    pub fn new(outcomes: Vec<(String, Operation)>, tol: &Tolerances) -> Result<Self> {
        let (dim_in, dim_out) = match outcomes.first() {
            Some((_, op)) => (op.dim_in(), op.dim_out()),
            None => {
                return Err(Error::InvariantViolation {
                    object: "Instrument",
                    reason: "must have at least one outcome",
                    residual: 0.0,
                })
            }
        };
        for (label, op) in &outcomes {
            if op.dim_in() != dim_in || op.dim_out() != dim_out {
                return Err(Error::DimMismatch(format!(
                    "outcome `{label}` is {}→{}, expected {dim_in}→{dim_out}",
                    op.dim_in(),
                    op.dim_out()
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
        let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
        for (_, op) in &outcomes {
            gram = gram.add(&op.kraus_gram());
        }
        let residual = gram.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if residual > tol.eq_tol {
            return Err(Error::InvariantViolation {
                object: "Instrument",
                reason: "summed operation must be a channel",
                residual,
            });
        }
        Ok(Instrument {
            dim_in,
            dim_out,
            outcomes,
        })
    }

    pub fn new_unchecked(
        dim_in: usize,
        dim_out: usize,
        outcomes: Vec<(String, Operation)>,
    ) -> Self {
        Instrument {
            dim_in,
            dim_out,
            outcomes,
        }
    }

    /// One-outcome instrument wrapping a channel.
    pub fn from_channel(label: &str, op: Operation, tol: &Tolerances) -> Result<Self> {
        Instrument::new(vec![(label.to_owned(), op)], tol)
    }

    /// Random instrument with numbered outcome labels.
    pub fn random(
        dim_in: usize,
        dim_out: usize,
        n_outcomes: usize,
        kraus_per_outcome: usize,
        seed: u64,
    ) -> Result<Self> {
        let grid =
            crate::linalg::random_instrument(dim_in, dim_out, n_outcomes, kraus_per_outcome, seed)?;
        let outcomes = grid
            .into_iter()
            .enumerate()
            .map(|(x, kraus)| {
                (
                    x.to_string(),
                    Operation::new_unchecked(dim_in, dim_out, kraus),
                )
            })
            .collect();
        Ok(Instrument {
            dim_in,
            dim_out,
            outcomes,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
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

    pub fn outcomes(&self) -> &[(String, Operation)] {
        &self.outcomes
    }

    pub fn operation(&self, label: &str) -> Option<&Operation> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, op)| op)
    }

    /// The channel Ī = Σ_x I_x.
    pub fn channel(&self) -> Operation {
        let mut total = self.outcomes[0].1.clone();
        for (_, op) in &self.outcomes[1..] {
            total = total.add(op);
        }
        total
    }

    /// Born-rule distribution x ↦ tr[I_x(ρ)], clamped to [0, 1].
    pub fn born_distribution(&self, rho: &State, tol: &Tolerances) -> Result<Vec<(String, f64)>> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "instrument input dim {} vs state dim {}",
                self.dim_in,
                rho.dim()
            )));
        }
        let mut dist = Vec::with_capacity(self.outcomes.len());
        let mut total = 0.0;
        for (label, op) in &self.outcomes {
            let p = op.apply(rho.matrix())?.trace().re;
            if p < -tol.psd_tol {
                return Err(Error::InvariantViolation {
                    object: "distribution",
                    reason: "negative outcome probability",
                    residual: -p,
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

    /// Updated state I_x(ρ)/tr[I_x(ρ)] after outcome `label`.
    pub fn update_state(&self, label: &str, rho: &State, tol: &Tolerances) -> Result<State> {
        let op = self
            .operation(label)
            .ok_or_else(|| Error::LabelMismatch(format!("unknown outcome `{label}`")))?;
        let raw = op.apply(rho.matrix())?;
        let p = raw.trace().re;
        if p <= tol.trace_tol {
            return Err(Error::ZeroProbability(label.to_owned()));
        }
        State::new(raw.scale_re(1.0 / p), tol)
    }

    /// Measured observable Î_x = I_x*(I).
    pub fn measured_observable(&self, tol: &Tolerances) -> Result<Observable> {
        let effects = self
            .outcomes
            .iter()
            .map(|(label, op)| Effect::new(op.dual_identity(), tol).map(|e| (label.clone(), e)))
            .collect::<Result<Vec<_>>>()?;
        Observable::new(effects, tol)
    }

    /// Sequential product (I∘J)_{xy} = J_y ∘ I_x as a bi-instrument.
    pub fn sequential_product(&self, next: &Instrument, tol: &Tolerances) -> Result<BiInstrument> {
        if self.dim_out != next.dim_in {
            return Err(Error::DimMismatch(format!(
                "sequential product of {}→{} with {}→{}",
                self.dim_in, self.dim_out, next.dim_in, next.dim_out
            )));
        }
        let mut grid = Vec::with_capacity(self.len() * next.len());
        for (_, op_x) in &self.outcomes {
            for (_, op_y) in &next.outcomes {
                grid.push(op_x.compose(op_y)?);
            }
        }
        BiInstrument::new(
            self.labels().map(str::to_owned).collect(),
            next.labels().map(str::to_owned).collect(),
            grid,
            tol,
        )
    }

    /// (I T J)_x = J̄ ∘ I_x: each outcome followed by the other channel.
    pub fn then(&self, next: &Instrument, tol: &Tolerances) -> Result<Instrument> {
        if self.dim_out != next.dim_in {
            return Err(Error::DimMismatch(format!(
                "then-product of {}→{} with {}→{}",
                self.dim_in, self.dim_out, next.dim_in, next.dim_out
            )));
        }
        let channel = next.channel();
        let outcomes = self
            .outcomes
            .iter()
            .map(|(label, op)| op.compose(&channel).map(|c| (label.clone(), c)))
            .collect::<Result<Vec<_>>>()?;
        Instrument::new(outcomes, tol)
    }

    /// Post-processing P_z = Σ_x λ_xz I_x for a row-stochastic λ.
    pub fn post_process(
        &self,
        lambda: &[Vec<f64>],
        new_labels: &[String],
        tol: &Tolerances,
    ) -> Result<Instrument> {
        if lambda.len() != self.len() {
            return Err(Error::BadStochasticMatrix(format!(
                "{} rows for {} outcomes",
                lambda.len(),
                self.len()
            )));
        }
        for row in lambda {
            if row.len() != new_labels.len() {
                return Err(Error::BadStochasticMatrix(format!(
                    "row of length {} for {} target outcomes",
                    row.len(),
                    new_labels.len()
                )));
            }
            if row.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
                return Err(Error::BadStochasticMatrix(
                    "entries must lie in [0, 1]".into(),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol.trace_tol {
                return Err(Error::BadStochasticMatrix(format!(
                    "row sums to {sum}, expected 1"
                )));
            }
        }
        let outcomes = new_labels
            .iter()
            .enumerate()
            .map(|(z, label)| {
                let mut acc: Option<Operation> = None;
                for (x, (_, op)) in self.outcomes.iter().enumerate() {
                    let scaled = op.scale(lambda[x][z]);
                    acc = Some(match acc {
                        Some(a) => a.add(&scaled),
                        None => scaled,
                    });
                }
                (label.clone(), acc.expect("nonempty instrument"))
            })
            .collect();
        Instrument::new(outcomes, tol)
    }

    /// Reduction of an instrument into H₁⊗H₂ by tracing out one factor.
    pub fn reduced(
        &self,
        n1: usize,
        n2: usize,
        keep: Keep,
        tol: &Tolerances,
    ) -> Result<Instrument> {
        if self.dim_out != n1 * n2 {
            return Err(Error::BadFactorization {
                dim: self.dim_out,
                n1,
                n2,
            });
        }
        let trace_out = Operation::trace_out(n1, n2, keep);
        let outcomes = self
            .outcomes
            .iter()
            .map(|(label, op)| op.compose(&trace_out).map(|c| (label.clone(), c)))
            .collect::<Result<Vec<_>>>()?;
        Instrument::new(outcomes, tol)
    }

    /// Max-entry map distance over matching labels; infinite when the label
    /// lists differ.
    pub fn map_distance(&self, other: &Instrument) -> f64 {
        if self.len() != other.len()
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
            .map(|((_, a), (_, b))| a.map_distance(b))
            .fold(0.0, f64::max)
    }
}

/// (J | I): J conditioned by I, i.e. (J|I)_y = J_y ∘ Ī.
pub fn conditioned(j: &Instrument, i: &Instrument, tol: &Tolerances) -> Result<Instrument> {
    if i.dim_out() != j.dim_in() {
        return Err(Error::DimMismatch(format!(
            "conditioning {}→{} by {}→{}",
            j.dim_in(),
            j.dim_out(),
            i.dim_in(),
            i.dim_out()
        )));
    }
    let channel = i.channel();
    let outcomes = j
        .outcomes()
        .iter()
        .map(|(label, op)| channel.compose(op).map(|c| (label.clone(), c)))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(outcomes, tol)
}

/// Convex combination Σ λ_i·I_i, realized by scaling Kraus operators by √λ_i
/// and concatenating outcome-wise.
pub fn convex_combination(
    instruments: &[Instrument],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<Instrument> {
    if instruments.is_empty() || instruments.len() != weights.len() {
        return Err(Error::BadWeights(format!(
            "{} weights for {} instruments",
            weights.len(),
            instruments.len()
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
    let first = &instruments[0];
    for inst in &instruments[1..] {
        if inst.dim_in() != first.dim_in() || inst.dim_out() != first.dim_out() {
            return Err(Error::DimMismatch(
                "mixed instruments must share spaces".into(),
            ));
        }
        if inst.len() != first.len() || !inst.labels().zip(first.labels()).all(|(a, b)| a == b) {
            return Err(Error::LabelMismatch(
                "mixed instruments must share the outcome space".into(),
            ));
        }
    }
    let outcomes = first
        .labels()
        .enumerate()
        .map(|(x, label)| {
            let mut acc: Option<Operation> = None;
            for (inst, &w) in instruments.iter().zip(weights) {
                let scaled = inst.outcomes()[x].1.scale(w);
                acc = Some(match acc {
                    Some(a) => a.add(&scaled),
                    None => scaled,
                });
            }
            (label.to_owned(), acc.expect("nonempty"))
        })
        .collect();
    Instrument::new(outcomes, tol)
}

/// Tensor product bi-instrument K_{xy} = I_x ⊗ J_y.
pub fn tensor_instrument(i: &Instrument, j: &Instrument, tol: &Tolerances) -> Result<BiInstrument> {
    let mut grid = Vec::with_capacity(i.len() * j.len());
    for (_, op_x) in i.outcomes() {
        for (_, op_y) in j.outcomes() {
            grid.push(op_x.tensor(op_y));
        }
    }
    BiInstrument::new(
        i.labels().map(str::to_owned).collect(),
        j.labels().map(str::to_owned).collect(),
        grid,
        tol,
    )
}

/// Observable A conditioned by an instrument: (A|I)_x = Ī*(A_x).
pub fn conditioned_observable(
    a: &Observable,
    i: &Instrument,
    tol: &Tolerances,
) -> Result<Observable> {
    if a.dim() != i.dim_out() {
        return Err(Error::DimMismatch(format!(
            "observable dim {} vs instrument output dim {}",
            a.dim(),
            i.dim_out()
        )));
    }
    let channel = i.channel();
    let effects = a
        .outcomes()
        .iter()
        .map(|(label, e)| {
            channel
                .dual_apply(e.matrix())
                .and_then(|m| Effect::new(m, tol))
                .map(|e| (label.clone(), e))
        })
        .collect::<Result<Vec<_>>>()?;
    Observable::new(effects, tol)
}

/// Bi-observable (B|I)_{xy} = I_x*(B_y).
pub fn conditioned_biobservable(
    b: &Observable,
    i: &Instrument,
    tol: &Tolerances,
) -> Result<BiObservable> {
    if b.dim() != i.dim_out() {
        return Err(Error::DimMismatch(format!(
            "observable dim {} vs instrument output dim {}",
            b.dim(),
            i.dim_out()
        )));
    }
    let mut grid = Vec::with_capacity(i.len() * b.len());
    for (_, op_x) in i.outcomes() {
        for (_, e_y) in b.outcomes() {
            grid.push(Effect::new(op_x.dual_apply(e_y.matrix())?, tol)?);
        }
    }
    BiObservable::new(
        i.labels().map(str::to_owned).collect(),
        b.labels().map(str::to_owned).collect(),
        grid,
        tol,
    )
}

/// I-sequential product (A[I]B)_y = Σ_x I_x*(B_y), defined when the
/// instrument actually measures A.
pub fn obs_sequential_product(
    a: &Observable,
    i: &Instrument,
    b: &Observable,
    tol: &Tolerances,
) -> Result<Observable> {
    let measured = i.measured_observable(tol)?;
    let residual = measured.distance(a);
    if residual > tol.eq_tol {
        return Err(Error::InstrumentDoesNotMeasureA(residual));
    }
    conditioned_observable(b, i, tol)
}

/// Grid-labeled instrument over a Cartesian outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct BiInstrument {
    dim_in: usize,
    dim_out: usize,
    labels1: Vec<String>,
    labels2: Vec<String>,
    /// Row-major over (x, y): index `ix * labels2.len() + iy`.
    grid: Vec<Operation>,
}

impl BiInstrument {
    pub fn new(
        labels1: Vec<String>,
        labels2: Vec<String>,
        grid: Vec<Operation>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if labels1.is_empty() || labels2.is_empty() || grid.len() != labels1.len() * labels2.len() {
            return Err(Error::LabelMismatch(format!(
                "grid of {} operations does not cover {}x{} labels",
                grid.len(),
                labels1.len(),
                labels2.len()
            )));
        }
        let (dim_in, dim_out) = (grid[0].dim_in(), grid[0].dim_out());
        for op in &grid {
            if op.dim_in() != dim_in || op.dim_out() != dim_out {
                return Err(Error::DimMismatch(
                    "grid operations have mixed spaces".into(),
                ));
            }
        }
        let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
        for op in &grid {
            gram = gram.add(&op.kraus_gram());
        }
        let residual = gram.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if residual > tol.eq_tol {
            return Err(Error::InvariantViolation {
                object: "BiInstrument",
                reason: "grid sum must be a channel",
                residual,
            });
        }
        Ok(BiInstrument {
            dim_in,
            dim_out,
            labels1,
            labels2,
            grid,
        })
    }

    pub fn new_unchecked(
        dim_in: usize,
        dim_out: usize,
        labels1: Vec<String>,
        labels2: Vec<String>,
        grid: Vec<Operation>,
    ) -> Self {
        BiInstrument {
            dim_in,
            dim_out,
            labels1,
            labels2,
            grid,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn labels1(&self) -> &[String] {
        &self.labels1
    }

    pub fn labels2(&self) -> &[String] {
        &self.labels2
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> &Operation {
        &self.grid[ix * self.labels2.len() + iy]
    }

    pub fn operation(&self, lx: &str, ly: &str) -> Option<&Operation> {
        let ix = self.labels1.iter().position(|l| l == lx)?;
        let iy = self.labels2.iter().position(|l| l == ly)?;
        Some(self.get(ix, iy))
    }

    pub fn grid(&self) -> &[Operation] {
        &self.grid
    }

    /// The channel of the whole grid.
    pub fn channel(&self) -> Operation {
        let mut total = self.grid[0].clone();
        for op in &self.grid[1..] {
            total = total.add(op);
        }
        total
    }

    /// Marginal instrument along one outcome axis; the channel is unchanged.
    pub fn marginal(&self, which: Marginal, tol: &Tolerances) -> Result<Instrument> {
        let outcomes = match which {
            Marginal::First => self
                .labels1
                .iter()
                .enumerate()
                .map(|(ix, label)| {
                    let mut acc = self.get(ix, 0).clone();
                    for iy in 1..self.labels2.len() {
                        acc = acc.add(self.get(ix, iy));
                    }
                    (label.clone(), acc)
                })
                .collect(),
            Marginal::Second => self
                .labels2
                .iter()
                .enumerate()
                .map(|(iy, label)| {
                    let mut acc = self.get(0, iy).clone();
                    for ix in 1..self.labels1.len() {
                        acc = acc.add(self.get(ix, iy));
                    }
                    (label.clone(), acc)
                })
                .collect(),
        };
        Instrument::new(outcomes, tol)
    }

    /// The four reduced marginals of a bi-instrument into H₁⊗H₂. The
    /// superscript/subscript convention follows the joint-instrument
    /// definition: K¹₁ keeps outcome x and factor H₁, K²₂ keeps outcome y
    /// and factor H₂, and the mixed marginals K²₁ and K¹₂ keep the opposite
    /// pairings.
    pub fn mixed_marginals(
        &self,
        n1: usize,
        n2: usize,
        tol: &Tolerances,
    ) -> Result<MixedMarginals> {
        if self.dim_out != n1 * n2 {
            return Err(Error::BadFactorization {
                dim: self.dim_out,
                n1,
                n2,
            });
        }
        let by_x = self.marginal(Marginal::First, tol)?;
        let by_y = self.marginal(Marginal::Second, tol)?;
        Ok(MixedMarginals {
            first_factor_by_x: by_x.reduced(n1, n2, Keep::First, tol)?,
            second_factor_by_y: by_y.reduced(n1, n2, Keep::Second, tol)?,
            first_factor_by_y: by_y.reduced(n1, n2, Keep::First, tol)?,
            second_factor_by_x: by_x.reduced(n1, n2, Keep::Second, tol)?,
        })
    }

    /// Measured bi-observable K̂_{xy} = K_{xy}*(I).
    pub fn measured_biobservable(&self, tol: &Tolerances) -> Result<BiObservable> {
        let grid = self
            .grid
            .iter()
            .map(|op| Effect::new(op.dual_identity(), tol))
            .collect::<Result<Vec<_>>>()?;
        BiObservable::new(self.labels1.clone(), self.labels2.clone(), grid, tol)
    }

    /// Flattens to a single-index instrument over joined labels.
    pub fn flatten(&self, tol: &Tolerances) -> Result<Instrument> {
        let outcomes = self
            .labels1
            .iter()
            .enumerate()
            .flat_map(|(ix, lx)| {
                self.labels2
                    .iter()
                    .enumerate()
                    .map(move |(iy, ly)| (join_labels(lx, ly), self.get(ix, iy).clone()))
            })
            .collect();
        Instrument::new(outcomes, tol)
    }

    /// Swaps the two outcome axes.
    pub fn transpose(&self) -> BiInstrument {
        let mut grid = Vec::with_capacity(self.grid.len());
        for iy in 0..self.labels2.len() {
            for ix in 0..self.labels1.len() {
                grid.push(self.get(ix, iy).clone());
            }
        }
        BiInstrument {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            labels1: self.labels2.clone(),
            labels2: self.labels1.clone(),
            grid,
        }
    }

    /// Map-level distance over matching grids; infinite when labels differ.
    pub fn map_distance(&self, other: &BiInstrument) -> f64 {
        if self.labels1 != other.labels1 || self.labels2 != other.labels2 {
            return f64::INFINITY;
        }
        self.grid
            .iter()
            .zip(&other.grid)
            .map(|(a, b)| a.map_distance(b))
            .fold(0.0, f64::max)
    }
}

/// The four reduced marginals of a bi-instrument into a product space.
#[derive(Debug, Clone)]
pub struct MixedMarginals {
    /// K¹₁: outcomes x, output H₁ (the first coexistence marginal).
    pub first_factor_by_x: Instrument,
    /// K²₂: outcomes y, output H₂ (the second coexistence marginal).
    pub second_factor_by_y: Instrument,
    /// K²₁: outcomes y, output H₁.
    pub first_factor_by_y: Instrument,
    /// K¹₂: outcomes x, output H₂.
    pub second_factor_by_x: Instrument,
}
