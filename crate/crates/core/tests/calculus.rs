//! Cross-module checks of the instrument calculus: the composition laws,
//! conditioning identities and coexistence transfers that tie operations,
//! instruments, families and coexistence together.

use qinstruments::coexistence::{
    condition_joint, measured_joint_biobservable, trivial_joint, verify_joint_instrument,
};
use qinstruments::families::{trivial, HolevoSpec, KrausSpec};
use qinstruments::instrument::{
    conditioned, conditioned_observable, convex_combination, BiInstrument, Instrument,
};
use qinstruments::linalg::{ComplexMatrix, Tolerances};
use qinstruments::objects::{verify_joint_biobservable, Effect, Marginal, Observable, State};
use qinstruments::operation::Operation;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn random_betas(dim: usize, n: usize, seed: u64) -> Vec<(String, ComplexMatrix)> {
    let total = qinstruments::linalg::random_state(dim, seed);
    let mut weights: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
        .iter()
        .enumerate()
        .map(|(k, &w)| (format!("b{k}"), total.scale_re(w)))
        .collect()
}

#[test]
fn dual_of_sequential_product_reverses() {
    for seed in 0..20u64 {
        let i = Instrument::random(2, 3, 2, 2, 1000 + seed).unwrap();
        let j = Instrument::random(3, 2, 2, 2, 1100 + seed).unwrap();
        let seq = i.sequential_product(&j, &tol()).unwrap();
        // Outcome-wise: ((I_x ∘ J_y))* = J_y* ∘ I_x* on matrix units.
        for (ix, (_, op_x)) in i.outcomes().iter().enumerate() {
            for (iy, (_, op_y)) in j.outcomes().iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        let unit = ComplexMatrix::matrix_unit(2, 2, a, b);
                        let lhs = seq.get(ix, iy).dual_apply(&unit).unwrap();
                        let rhs = op_x.dual_apply(&op_y.dual_apply(&unit).unwrap()).unwrap();
                        assert!(lhs.approx_eq(&rhs, 1e-10));
                    }
                }
            }
        }
    }
}

#[test]
fn coexistence_descends_to_measured_observables() {
    for seed in 0..10u64 {
        let i = Instrument::random(2, 2, 2, 2, 1200 + seed).unwrap();
        let betas = random_betas(3, 2, 1300 + seed);
        let j = trivial(2, &betas, &tol()).unwrap();
        let k = trivial_joint(&i, &betas, &tol()).unwrap();
        let cert = verify_joint_instrument(&k, &i, &j, 2, 3, &tol()).unwrap();
        assert!(cert.pass);
        let c = measured_joint_biobservable(&cert, &tol()).unwrap();
        let obs_cert = verify_joint_biobservable(
            &c,
            &i.measured_observable(&tol()).unwrap(),
            &j.measured_observable(&tol()).unwrap(),
            &tol(),
        )
        .unwrap();
        assert!(obs_cert.pass, "residual {}", obs_cert.max_residual());
    }
}

#[test]
fn mixture_channel_and_observable_are_mixtures() {
    for seed in 0..10u64 {
        let a = Instrument::random(2, 3, 2, 2, 1400 + seed).unwrap();
        let b = Instrument::random(2, 3, 2, 1, 1500 + seed).unwrap();
        let weights = [0.4, 0.6];
        let mix = convex_combination(&[a.clone(), b.clone()], &weights, &tol()).unwrap();
        // Channel of the mixture is the mixture of channels.
        let want_channel = a
            .channel()
            .scale(weights[0])
            .add(&b.channel().scale(weights[1]));
        assert!(mix.channel().map_distance(&want_channel) < 1e-10);
        // Measured observable mixes linearly.
        let hat = mix.measured_observable(&tol()).unwrap();
        let ha = a.measured_observable(&tol()).unwrap();
        let hb = b.measured_observable(&tol()).unwrap();
        for (k, (_, e)) in hat.outcomes().iter().enumerate() {
            let want = ha.outcomes()[k]
                .1
                .matrix()
                .scale_re(weights[0])
                .add(&hb.outcomes()[k].1.matrix().scale_re(weights[1]));
            assert!(e.matrix().approx_eq(&want, 1e-10));
        }
    }
}

#[test]
fn trivial_instrument_identities() {
    let tolerances = tol();
    let i = Instrument::random(2, 2, 2, 2, 1601).unwrap();
    let betas = random_betas(3, 2, 1602);
    let j = trivial(2, &betas, &tolerances).unwrap();
    let mut beta_total = ComplexMatrix::zeros(3, 3);
    for (_, b) in &betas {
        beta_total = beta_total.add(b);
    }

    // (J | I) = J.
    let cond = conditioned(&j, &i, &tolerances).unwrap();
    assert!(cond.map_distance(&j) < 1e-10);

    // K_xy = I_x ⊗ β_y is a joint for (I, J).
    let k = trivial_joint(&i, &betas, &tolerances).unwrap();
    let cert = verify_joint_instrument(&k, &i, &j, 2, 3, &tolerances).unwrap();
    assert!(cert.pass);

    // Mixed marginals: K²₁y = tr(β_y)·Ī and K¹₂x = tr[I_x(ρ)]·β.
    let mm = k.mixed_marginals(2, 3, &tolerances).unwrap();
    let rho = State::random(2, 1603);
    let channeled = i.channel().apply(rho.matrix()).unwrap();
    for (y, (_, beta)) in betas.iter().enumerate() {
        let got = mm.first_factor_by_y.outcomes()[y]
            .1
            .apply(rho.matrix())
            .unwrap();
        assert!(got.approx_eq(&channeled.scale_re(beta.trace().re), 1e-10));
    }
    for (x, (_, op)) in i.outcomes().iter().enumerate() {
        let got = mm.second_factor_by_x.outcomes()[x]
            .1
            .apply(rho.matrix())
            .unwrap();
        let weight = op.apply(rho.matrix()).unwrap().trace().re;
        assert!(got.approx_eq(&beta_total.scale_re(weight), 1e-10));
    }

    // Ĵ is the identity observable {tr(β_y)·I}.
    let jhat = j.measured_observable(&tolerances).unwrap();
    for ((_, e), (_, beta)) in jhat.outcomes().iter().zip(&betas) {
        let want = ComplexMatrix::scaled_identity(2, beta.trace().re);
        assert!(e.matrix().approx_eq(&want, 1e-10));
    }

    // Trivial upstream: (I | J)_y(ρ) = I_y(β) for every state ρ.
    let upstream = trivial(2, &random_betas(2, 2, 1604), &tolerances).unwrap();
    let mut upstream_beta = ComplexMatrix::zeros(2, 2);
    for (_, b) in &random_betas(2, 2, 1604) {
        upstream_beta = upstream_beta.add(b);
    }
    let downstream = Instrument::random(2, 3, 2, 2, 1605).unwrap();
    let cond2 = conditioned(&downstream, &upstream, &tolerances).unwrap();
    for seed in 0..3 {
        let rho = State::random(2, 1610 + seed);
        for (y, (_, op)) in downstream.outcomes().iter().enumerate() {
            let got = cond2.outcomes()[y].1.apply(rho.matrix()).unwrap();
            let want = op.apply(&upstream_beta).unwrap();
            assert!(got.approx_eq(&want, 1e-10));
        }
    }
}

#[test]
fn kraus_sequential_product_operators() {
    // (K∘J)_{xy} has the single Kraus operator J_y·K_x.
    let k_spec = KrausSpec::random(2, 3, 2, 1701).unwrap();
    let j_spec = KrausSpec::random(3, 2, 2, 1702).unwrap();
    let seq = k_spec
        .to_instrument(&tol())
        .unwrap()
        .sequential_product(&j_spec.to_instrument(&tol()).unwrap(), &tol())
        .unwrap();
    for (x, (_, kx)) in k_spec.operators().iter().enumerate() {
        for (y, (_, jy)) in j_spec.operators().iter().enumerate() {
            let want = Operation::new_unchecked(2, 2, vec![jy.mul(kx)]);
            assert!(seq.get(x, y).map_distance(&want) < 1e-12);
        }
    }
    // (K T J)_x(ρ) = Σ_y J_y·K_x·ρ·K_x†·J_y†.
    let then = k_spec
        .to_instrument(&tol())
        .unwrap()
        .then(&j_spec.to_instrument(&tol()).unwrap(), &tol())
        .unwrap();
    let rho = State::random(2, 1703);
    for (x, (_, kx)) in k_spec.operators().iter().enumerate() {
        let mut want = ComplexMatrix::zeros(2, 2);
        for (_, jy) in j_spec.operators() {
            let jk = jy.mul(kx);
            want = want.add(&jk.mul(rho.matrix()).mul(&jk.adjoint()));
        }
        assert!(then.outcomes()[x]
            .1
            .apply(rho.matrix())
            .unwrap()
            .approx_eq(&want, 1e-11));
    }
}

#[test]
fn conditioned_instrument_measures_conditioned_observable() {
    // (J|I)^ = (Ĵ|I) = Ī*(Ĵ_y).
    for seed in 0..10u64 {
        let i = Instrument::random(2, 3, 2, 2, 1800 + seed).unwrap();
        let j = Instrument::random(3, 2, 3, 2, 1900 + seed).unwrap();
        let cond = conditioned(&j, &i, &tol()).unwrap();
        let lhs = cond.measured_observable(&tol()).unwrap();
        let rhs =
            conditioned_observable(&j.measured_observable(&tol()).unwrap(), &i, &tol()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-10);
    }
}

#[test]
fn conditioned_measured_observables_coexist() {
    for seed in 0..6u64 {
        let i = Instrument::random(2, 2, 2, 2, 2000 + seed).unwrap();
        let betas = random_betas(2, 2, 2100 + seed);
        let j = trivial(2, &betas, &tol()).unwrap();
        let l = trivial_joint(&i, &betas, &tol()).unwrap();
        let upstream = Instrument::random(3, 2, 2, 2, 2200 + seed).unwrap();
        let m = condition_joint(&l, &upstream, &tol()).unwrap();
        let ci = conditioned(&i, &upstream, &tol()).unwrap();
        let cj = conditioned(&j, &upstream, &tol()).unwrap();
        let cert = verify_joint_instrument(&m, &ci, &cj, 2, 2, &tol()).unwrap();
        assert!(cert.pass);
        // Observable level: (Î|K) co (Ĵ|K) via the measured joint.
        let c = measured_joint_biobservable(&cert, &tol()).unwrap();
        let ihat_cond =
            conditioned_observable(&i.measured_observable(&tol()).unwrap(), &upstream, &tol())
                .unwrap();
        let jhat_cond =
            conditioned_observable(&j.measured_observable(&tol()).unwrap(), &upstream, &tol())
                .unwrap();
        let obs_cert = verify_joint_biobservable(&c, &ihat_cond, &jhat_cond, &tol()).unwrap();
        assert!(obs_cert.pass, "residual {}", obs_cert.max_residual());
    }
}

#[test]
fn measured_biobservable_of_sequential_product() {
    // (I_x ∘ J_y)^ = I_x*(Ĵ_y).
    for seed in 0..10u64 {
        let i = Instrument::random(2, 3, 2, 2, 2300 + seed).unwrap();
        let j = Instrument::random(3, 2, 2, 2, 2400 + seed).unwrap();
        let seq = i.sequential_product(&j, &tol()).unwrap();
        let hat = seq.measured_biobservable(&tol()).unwrap();
        let jhat = j.measured_observable(&tol()).unwrap();
        for (ix, (_, op_x)) in i.outcomes().iter().enumerate() {
            for (iy, (_, ej)) in jhat.outcomes().iter().enumerate() {
                let want = op_x.dual_apply(ej.matrix()).unwrap();
                assert!(hat.get(ix, iy).matrix().approx_eq(&want, 1e-10));
            }
        }
    }
}

/// Identity-observable Holevo instruments with one shared state commute
/// under the sequential product; these are the designed commuting pairs.
fn commuting_holevo_pair(dim: usize, seed: u64) -> (HolevoSpec, HolevoSpec) {
    let gamma = State::random(dim, seed);
    let a_weights = [0.3, 0.7];
    let b_weights = [0.55, 0.25, 0.2];
    let a = Observable::new(
        a_weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (format!("a{k}"), Effect::scaled_identity(dim, w)))
            .collect(),
        &tol(),
    )
    .unwrap();
    let b = Observable::new(
        b_weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (format!("b{k}"), Effect::scaled_identity(dim, w)))
            .collect(),
        &tol(),
    )
    .unwrap();
    let ha = HolevoSpec::new(a, vec![gamma.clone(); 2]).unwrap();
    let hb = HolevoSpec::new(b, vec![gamma; 3]).unwrap();
    (ha, hb)
}

#[test]
fn commuting_pairs_fix_each_others_observables() {
    for seed in 0..10u64 {
        let (ha, hb) = commuting_holevo_pair(2 + (seed % 2) as usize, 2500 + seed);
        let i = ha.to_instrument(&tol()).unwrap();
        let j = hb.to_instrument(&tol()).unwrap();
        // The design really does commute: I∘J = (J∘I) transposed.
        let ij = i.sequential_product(&j, &tol()).unwrap();
        let ji = j.sequential_product(&i, &tol()).unwrap();
        assert!(ij.map_distance(&ji.transpose()) < 1e-11);

        // Commuting compositions let the duals swap: I_x*(Ĵ_y) = J_y*(Î_x).
        let ihat = i.measured_observable(&tol()).unwrap();
        let jhat = j.measured_observable(&tol()).unwrap();
        for (ix, (_, op_x)) in i.outcomes().iter().enumerate() {
            for (iy, (_, op_y)) in j.outcomes().iter().enumerate() {
                let lhs = op_x.dual_apply(jhat.outcomes()[iy].1.matrix()).unwrap();
                let rhs = op_y.dual_apply(ihat.outcomes()[ix].1.matrix()).unwrap();
                assert!(lhs.approx_eq(&rhs, 1e-10));
            }
        }

        // Each measured observable is fixed by conditioning on the other:
        // (Î|J) = Î and (Ĵ|I) = Ĵ.
        let ihat_cond = conditioned_observable(&ihat, &j, &tol()).unwrap();
        assert!(ihat_cond.distance(&ihat) < 1e-10);
        let jhat_cond = conditioned_observable(&jhat, &i, &tol()).unwrap();
        assert!(jhat_cond.distance(&jhat) < 1e-10);

        // Commuting compositions force commuting observables.
        for (_, ax) in ha.observable().outcomes() {
            for (_, by) in hb.observable().outcomes() {
                let comm = ax
                    .matrix()
                    .mul(by.matrix())
                    .sub(&by.matrix().mul(ax.matrix()));
                assert!(comm.max_abs_entry() < 1e-8);
            }
        }
    }
}

#[test]
fn generic_holevo_pairs_do_not_commute() {
    // Generic Holevo pairs on the same space fail I∘J = J∘I.
    let ha = HolevoSpec::random(2, 2, 2, 2601).unwrap();
    let hb = HolevoSpec::random(2, 2, 2, 2602).unwrap();
    let i = ha.to_instrument(&tol()).unwrap();
    let j = hb.to_instrument(&tol()).unwrap();
    let ij = i.sequential_product(&j, &tol()).unwrap();
    let ji = j.sequential_product(&i, &tol()).unwrap();
    // Label sets differ (so do the maps); compare the underlying grids after
    // aligning labels by position.
    let realigned = BiInstrument::new_unchecked(
        2,
        2,
        ij.labels1().to_vec(),
        ij.labels2().to_vec(),
        ji.transpose().grid().to_vec(),
    );
    assert!(ij.map_distance(&realigned) > 1e-3);
}

#[test]
fn instrument_validity_closed_under_combinators() {
    let tolerances = tol();
    let i = Instrument::random(2, 2, 2, 2, 2701).unwrap();
    let j = Instrument::random(2, 3, 2, 2, 2702).unwrap();
    // Each construction already revalidates through Instrument::new or
    // BiInstrument::new; reaching here without error is the assertion.
    let seq = i.sequential_product(&j, &tolerances).unwrap();
    seq.marginal(Marginal::First, &tolerances).unwrap();
    seq.marginal(Marginal::Second, &tolerances).unwrap();
    conditioned(&j, &i, &tolerances).unwrap();
    i.then(&j, &tolerances).unwrap();
    convex_combination(
        &[i.clone(), Instrument::random(2, 2, 2, 1, 2703).unwrap()],
        &[0.5, 0.5],
        &tolerances,
    )
    .unwrap();
    i.post_process(
        &[vec![0.3, 0.7], vec![0.6, 0.4]],
        &["u".into(), "v".into()],
        &tolerances,
    )
    .unwrap();
    qinstruments::instrument::tensor_instrument(&i, &j, &tolerances).unwrap();
}
