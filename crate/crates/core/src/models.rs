//! Measurement models: a base system interacts with an auxiliary probe
//! system, then the probe observable is measured with a Lüders instrument.
//!
//! The model's bi-instrument applies the interaction first and the probe
//! measurement second; its reduced marginal over the auxiliary space is the
//! instrument the model measures.

use crate::error::{Error, Result};
use crate::instrument::{join_labels, BiInstrument, Instrument};
use crate::linalg::{kron, psd_sqrt, ComplexMatrix, Keep, Tolerances};
use crate::objects::{tensor_biobservable, Effect, Marginal, Observable};
use crate::operation::Operation;

/// Four-tuple (H, K, I, P): base space, auxiliary space, interaction
/// instrument from H to H⊗K, and probe observable on K.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    base_dim: usize,
    aux_dim: usize,
    interaction: Instrument,
    probe: Observable,
}

impl MeasurementModel {
    pub fn new(
        base_dim: usize,
        aux_dim: usize,
        interaction: Instrument,
        probe: Observable,
    ) -> Result<Self> {
        if interaction.dim_in() != base_dim {
            return Err(Error::DimMismatch(format!(
                "interaction input {} vs base dim {base_dim}",
                interaction.dim_in()
            )));
        }
        if interaction.dim_out() != base_dim * aux_dim {
            return Err(Error::BadFactorization {
                dim: interaction.dim_out(),
                n1: base_dim,
                n2: aux_dim,
            });
        }
        if probe.dim() != aux_dim {
            return Err(Error::DimMismatch(format!(
                "probe dim {} vs auxiliary dim {aux_dim}",
                probe.dim()
            )));
        }
        Ok(MeasurementModel {
            base_dim,
            aux_dim,
            interaction,
            probe,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    pub fn interaction(&self) -> &Instrument {
        &self.interaction
    }

    pub fn probe(&self) -> &Observable {
        &self.probe
    }

    /// Lüders operation of the probe effect lifted to H⊗K: single Kraus
    /// (I_H ⊗ P_x)^{1/2} = I_H ⊗ P_x^{1/2}.
    fn probe_operation(&self, effect: &Effect, tol: &Tolerances) -> Result<Operation> {
        let root = psd_sqrt(effect.matrix(), tol)?;
        let lifted = kron(&ComplexMatrix::identity(self.base_dim), &root);
        Ok(Operation::new_unchecked(
            self.base_dim * self.aux_dim,
            self.base_dim * self.aux_dim,
            vec![lifted],
        ))
    }

    /// Measurement bi-instrument M_{xy} = L^{I⊗P_x} ∘ I_y: probe outcomes
    /// index the rows, interaction outcomes the columns.
    pub fn measurement_instrument(&self, tol: &Tolerances) -> Result<BiInstrument> {
        let probe_ops = self
            .probe
            .outcomes()
            .iter()
            .map(|(_, e)| self.probe_operation(e, tol))
            .collect::<Result<Vec<_>>>()?;
        let mut grid = Vec::with_capacity(self.probe.len() * self.interaction.len());
        for probe_op in &probe_ops {
            for (_, interaction_op) in self.interaction.outcomes() {
                grid.push(interaction_op.compose(probe_op)?);
            }
        }
        BiInstrument::new(
            self.probe.labels().map(str::to_owned).collect(),
            self.interaction.labels().map(str::to_owned).collect(),
            grid,
            tol,
        )
    }

    /// The instrument measured by the model: marginal over interaction
    /// outcomes, reduced over the auxiliary factor.
    pub fn measured_instrument(&self, tol: &Tolerances) -> Result<Instrument> {
        self.measurement_instrument(tol)?
            .marginal(Marginal::First, tol)?
            .reduced(self.base_dim, self.aux_dim, Keep::First, tol)
    }

    /// The observable measured by the model: Ī*(I_H ⊗ P_x).
    pub fn measured_observable(&self, tol: &Tolerances) -> Result<Observable> {
        let dual = self.interaction.channel();
        let identity = ComplexMatrix::identity(self.base_dim);
        let effects = self
            .probe
            .outcomes()
            .iter()
            .map(|(label, e)| {
                dual.dual_apply(&kron(&identity, e.matrix()))
                    .and_then(|m| Effect::new(m, tol))
                    .map(|eff| (label.clone(), eff))
            })
            .collect::<Result<Vec<_>>>()?;
        Observable::new(effects, tol)
    }
}

/// Sequential product of measurement models: the second model's base space
/// must be the first model's H⊗K. The product has auxiliary space K⊗K₁,
/// interaction I∘I₁ (flattened over paired labels) and probe P⊗P₁.
pub fn sequential_model_product(
    m: &MeasurementModel,
    m1: &MeasurementModel,
    tol: &Tolerances,
) -> Result<MeasurementModel> {
    if m1.interaction.dim_in() != m.base_dim * m.aux_dim {
        return Err(Error::DimMismatch(format!(
            "second model's base space is {}, expected {}",
            m1.interaction.dim_in(),
            m.base_dim * m.aux_dim
        )));
    }
    let interaction = m
        .interaction
        .sequential_product(&m1.interaction, tol)?
        .flatten(tol)?;
    let probe = flatten_probe(&m.probe, &m1.probe, tol)?;
    MeasurementModel::new(m.base_dim, m.aux_dim * m1.aux_dim, interaction, probe)
}

fn flatten_probe(p: &Observable, p1: &Observable, tol: &Tolerances) -> Result<Observable> {
    let bi = tensor_biobservable(p, p1);
    let mut outcomes = Vec::with_capacity(bi.labels1().len() * bi.labels2().len());
    for (ix, lx) in bi.labels1().iter().enumerate() {
        for (iy, ly) in bi.labels2().iter().enumerate() {
            outcomes.push((join_labels(lx, ly), bi.get(ix, iy).clone()));
        }
    }
    Observable::new(outcomes, tol)
}
