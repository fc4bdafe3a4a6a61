//! Coexistence certificates and the joint constructions.
//!
//! Coexistence of two instruments is witnessed by a joint bi-instrument into
//! the tensor product of their output spaces whose reduced marginals recover
//! both. This module verifies such certificates and builds the standard
//! joints: the trivial-partner joint, the post-processing and conditioning
//! transfers, the observable-level transfer, and the conditioned/measured
//! pair joint. There is deliberately no feasibility solver: every claim is a
//! checkable certificate.

use crate::error::{Error, Result};
use crate::instrument::{BiInstrument, Instrument};
use crate::linalg::{ComplexMatrix, Tolerances};
use crate::objects::{BiObservable, Effect, Observable};
use crate::operation::Operation;

/// Outcome of verifying a joint bi-instrument against its two marginals.
#[derive(Debug, Clone)]
pub struct JointCertificate {
    /// The verified joint, into H₁⊗H₂.
    pub joint: BiInstrument,
    /// Output factor dimensions (n1, n2).
    pub factor_dims: (usize, usize),
    /// Map distance of K¹₁ from the first instrument.
    pub residual_1: f64,
    /// Map distance of K²₂ from the second instrument.
    pub residual_2: f64,
    /// True iff both residuals are within eq_tol.
    pub pass: bool,
}

impl JointCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residual_1.max(self.residual_2)
    }
}

/// Verifies that `k` is a joint bi-instrument for `(i, j)`: the reduced
/// marginal K¹₁ must equal i and K²₂ must equal j, both as maps.
pub fn verify_joint_instrument(
    k: &BiInstrument,
    i: &Instrument,
    j: &Instrument,
    n1: usize,
    n2: usize,
    tol: &Tolerances,
) -> Result<JointCertificate> {
    let i_labels: Vec<&str> = i.labels().collect();
    let j_labels: Vec<&str> = j.labels().collect();
    if k.labels1() != i_labels.as_slice() || k.labels2() != j_labels.as_slice() {
        return Err(Error::LabelMismatch(
            "joint labels must equal the Cartesian product of the marginals'".into(),
        ));
    }
    if n1 != i.dim_out() || n2 != j.dim_out() || k.dim_out() != n1 * n2 {
        return Err(Error::BadFactorization {
            dim: k.dim_out(),
            n1,
            n2,
        });
    }
    // Residuals are computed operation by operation so that a violating grid
    // is reported with its residual instead of being rejected up front.
    let trace_out_second = Operation::trace_out(n1, n2, crate::linalg::Keep::First);
    let trace_out_first = Operation::trace_out(n1, n2, crate::linalg::Keep::Second);
    let mut residual_1 = 0.0f64;
    for (ix, (_, op_x)) in i.outcomes().iter().enumerate() {
        let mut acc = k.get(ix, 0).clone();
        for iy in 1..k.labels2().len() {
            acc = acc.add(k.get(ix, iy));
        }
        let reduced = acc.compose(&trace_out_second)?;
        residual_1 = residual_1.max(reduced.map_distance(op_x));
    }
    let mut residual_2 = 0.0f64;
    for (iy, (_, op_y)) in j.outcomes().iter().enumerate() {
        let mut acc = k.get(0, iy).clone();
        for ix in 1..k.labels1().len() {
            acc = acc.add(k.get(ix, iy));
        }
        let reduced = acc.compose(&trace_out_first)?;
        residual_2 = residual_2.max(reduced.map_distance(op_y));
    }
    Ok(JointCertificate {
        joint: k.clone(),
        factor_dims: (n1, n2),
        residual_1,
        residual_2,
        pass: residual_1 <= tol.eq_tol && residual_2 <= tol.eq_tol,
    })
}

/// The joint K_{xy}(ρ) = I_x(ρ) ⊗ β_y certifying that every instrument
/// coexists with the trivial instrument of the β_y.
pub fn trivial_joint(
    i: &Instrument,
    betas: &[(String, ComplexMatrix)],
    tol: &Tolerances,
) -> Result<BiInstrument> {
    if betas.is_empty() {
        return Err(Error::InvariantViolation {
            object: "trivial joint",
            reason: "needs at least one β output",
            residual: 0.0,
        });
    }
    let mut grid = Vec::with_capacity(i.len() * betas.len());
    for (_, op_x) in i.outcomes() {
        for (_, beta) in betas {
            grid.push(crate::operation::tensor_with_fixed(op_x, beta, tol)?);
        }
    }
    BiInstrument::new(
        i.labels().map(str::to_owned).collect(),
        betas.iter().map(|(l, _)| l.clone()).collect(),
        grid,
        tol,
    )
}

/// Post-processing transfer: from a joint for (i, j) to a joint
/// L_{zy} = Σ_x λ_xz·K_{xy} for (post-processing of i, j).
pub fn postprocess_joint(
    k: &BiInstrument,
    lambda: &[Vec<f64>],
    new_labels: &[String],
    tol: &Tolerances,
) -> Result<BiInstrument> {
    if lambda.len() != k.labels1().len() {
        return Err(Error::BadStochasticMatrix(format!(
            "{} rows for {} outcomes",
            lambda.len(),
            k.labels1().len()
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
    let n_y = k.labels2().len();
    let mut grid = Vec::with_capacity(new_labels.len() * n_y);
    for z in 0..new_labels.len() {
        for iy in 0..n_y {
            let mut acc: Option<Operation> = None;
            for (x, row) in lambda.iter().enumerate() {
                let scaled = k.get(x, iy).scale(row[z]);
                acc = Some(match acc {
                    Some(a) => a.add(&scaled),
                    None => scaled,
                });
            }
            grid.push(acc.expect("nonempty lambda"));
        }
    }
    BiInstrument::new(new_labels.to_vec(), k.labels2().to_vec(), grid, tol)
}

/// Conditioning transfer: from a joint L for (i, j) to the joint
/// M_{xy} = L_{xy} ∘ K̄ for ((i|k), (j|k)).
pub fn condition_joint(l: &BiInstrument, k: &Instrument, tol: &Tolerances) -> Result<BiInstrument> {
    if k.dim_out() != l.dim_in() {
        return Err(Error::DimMismatch(format!(
            "conditioning joint on {} by instrument into {}",
            l.dim_in(),
            k.dim_out()
        )));
    }
    let channel = k.channel();
    let grid = l
        .grid()
        .iter()
        .map(|op| channel.compose(op))
        .collect::<Result<Vec<_>>>()?;
    BiInstrument::new(l.labels1().to_vec(), l.labels2().to_vec(), grid, tol)
}

/// Observable-level transfer: from a joint bi-observable C for (a, b) to the
/// joint D_{xy} = Ī*(C_{xy}) for ((a|i), (b|i)).
pub fn observable_joint_transfer(
    c: &BiObservable,
    i: &Instrument,
    tol: &Tolerances,
) -> Result<BiObservable> {
    if c.dim() != i.dim_out() {
        return Err(Error::DimMismatch(format!(
            "bi-observable on {} vs instrument into {}",
            c.dim(),
            i.dim_out()
        )));
    }
    let dual_channel = i.channel();
    let grid = c
        .grid()
        .iter()
        .map(|e| {
            dual_channel
                .dual_apply(e.matrix())
                .and_then(|m| Effect::new(m, tol))
        })
        .collect::<Result<Vec<_>>>()?;
    BiObservable::new(c.labels1().to_vec(), c.labels2().to_vec(), grid, tol)
}

/// The joint bi-observable B_{xy} = I_x*(A_y) witnessing that a conditioned
/// observable coexists with the measured observable: its marginals are Î and
/// (A|I).
pub fn measured_conditioned_joint(
    i: &Instrument,
    a: &Observable,
    tol: &Tolerances,
) -> Result<BiObservable> {
    crate::instrument::conditioned_biobservable(a, i, tol)
}

/// The measured bi-observable of a certified joint bi-instrument, itself a
/// joint bi-observable for the two measured observables.
pub fn measured_joint_biobservable(
    cert: &JointCertificate,
    tol: &Tolerances,
) -> Result<BiObservable> {
    if !cert.pass {
        return Err(Error::UncertifiedJoint {
            residual_1: cert.residual_1,
            residual_2: cert.residual_2,
        });
    }
    cert.joint.measured_biobservable(tol)
}
