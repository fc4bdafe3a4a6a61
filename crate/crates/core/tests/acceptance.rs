//! Acceptance suite: every criterion runs at its stated tolerance over
//! seeded random inputs and prints one pass/fail line.
//!
//! Library-level criteria live here; the scenario-file and CLI-determinism
//! criteria live in the CLI crate's acceptance suite.

use qinstruments::coexistence::{
    condition_joint, measured_conditioned_joint, observable_joint_transfer, postprocess_joint,
    trivial_joint, verify_joint_instrument,
};
use qinstruments::families::{
    arbitrary_then_holevo, convex_holevo, detect_holevo, detect_kraus, holevo_compose_closed_form,
    holevo_mixture_states, holevo_then_arbitrary, lueders, trivial, HolevoSpec, KrausSpec,
};
use qinstruments::instrument::{
    conditioned, conditioned_observable, convex_combination, tensor_instrument, BiInstrument,
    Instrument,
};
use qinstruments::linalg::{
    hermitian_eig, kron, outer, random_hermitian, random_unitary, ComplexMatrix, Keep, Tolerances,
};
use qinstruments::objects::{
    commuting_joint, verify_joint_biobservable, BiObservable, Effect, Marginal, Observable, State,
};
use qinstruments::operation::Operation;

const TRIALS: usize = 100;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn report(name: &str, residual: f64, limit: f64) {
    let status = if residual <= limit { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {status} (max residual {residual:.3e}, limit {limit:.1e})");
    assert!(
        residual <= limit,
        "{name}: residual {residual:.3e} exceeds {limit:.1e}"
    );
}

fn report_flag(name: &str, ok: bool) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {status}");
    assert!(ok, "{name} failed");
}

fn random_betas(dim: usize, n: usize, seed: u64) -> Vec<(String, ComplexMatrix)> {
    let total = qinstruments::linalg::random_state(dim, seed);
    let mut weights: Vec<f64> = (0..n).map(|k| (k + 1) as f64).collect();
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

fn random_sharp_observable(dim: usize, seed: u64) -> Observable {
    let u = random_unitary(dim, seed);
    let outcomes = (0..dim)
        .map(|k| {
            let col = ComplexMatrix::basis_column(dim, k);
            let p = u.mul(&outer(&col, &col)).mul(&u.adjoint());
            (k.to_string(), Effect::new_unchecked(p.hermitian_part()))
        })
        .collect();
    Observable::new(outcomes, &tol()).unwrap()
}

#[test]
fn criterion_01_duality_suite() {
    let mut worst = 0.0f64;
    for dim in [2usize, 3, 4] {
        for trial in 0..TRIALS as u64 {
            let seed = 10_000 + dim as u64 * 1000 + trial;
            let op = Operation::random(dim, dim, 2, seed);
            let b = random_hermitian(dim, seed + 50_000);
            let m = random_hermitian(dim, seed + 60_000);
            let lhs = b.mul(&op.apply(&m).unwrap()).trace();
            let rhs = op.dual_apply(&b).unwrap().mul(&m).trace();
            worst = worst.max((lhs - rhs).norm());
        }
    }
    report("1a duality identity", worst, 1e-9);

    // Dual of a composition reverses: (I∘J)* = J*∘I* on matrix units,
    // dims <= 4.
    let mut worst_compose = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 70_000 + trial;
        let first = Operation::random(2, 3, 2, seed);
        let second = Operation::random(3, 4, 2, seed + 10_000);
        let chained = first.compose(&second).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let unit = ComplexMatrix::matrix_unit(4, 4, i, j);
                let lhs = chained.dual_apply(&unit).unwrap();
                let rhs = first
                    .dual_apply(&second.dual_apply(&unit).unwrap())
                    .unwrap();
                worst_compose = worst_compose.max(lhs.max_abs_diff(&rhs));
            }
        }
    }
    report("1b dual of composition", worst_compose, 1e-8);
}

#[test]
fn criterion_02_instrument_algebra() {
    let mut worst = 0.0f64;
    let mut worst_channel = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 80_000 + trial;
        let dims = [(2, 2, 2), (2, 3, 2), (3, 2, 3)][trial as usize % 3];
        let i = Instrument::random(dims.0, dims.1, 2, 2, seed).unwrap();
        let j = Instrument::random(dims.1, dims.2, 2, 2, seed + 10_000).unwrap();
        let seq = i.sequential_product(&j, &tol()).unwrap();
        let cond = conditioned(&j, &i, &tol()).unwrap();
        worst = worst.max(cond.map_distance(&seq.marginal(Marginal::Second, &tol()).unwrap()));
        let then = i.then(&j, &tol()).unwrap();
        worst = worst.max(then.map_distance(&seq.marginal(Marginal::First, &tol()).unwrap()));

        let c0 = seq.channel();
        worst_channel = worst_channel
            .max(c0.map_distance(&seq.marginal(Marginal::First, &tol()).unwrap().channel()))
            .max(c0.map_distance(&seq.marginal(Marginal::Second, &tol()).unwrap().channel()));
    }
    report("2a conditioned/then are marginals", worst, 1e-8);
    report("2b marginals share the channel", worst_channel, 1e-9);
}

#[test]
fn criterion_03_convexity() {
    let mut worst = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 90_000 + trial;
        let a = Instrument::random(2, 3, 2, 2, seed).unwrap();
        let b = Instrument::random(2, 3, 2, 1, seed + 10_000).unwrap();
        let weights = [0.35, 0.65];
        let mix = convex_combination(&[a.clone(), b.clone()], &weights, &tol()).unwrap();
        // Channel and measured observable of a mixture mix linearly.
        let want_channel = a
            .channel()
            .scale(weights[0])
            .add(&b.channel().scale(weights[1]));
        worst = worst.max(mix.channel().map_distance(&want_channel));
        let hat = mix.measured_observable(&tol()).unwrap();
        let ha = a.measured_observable(&tol()).unwrap();
        let hb = b.measured_observable(&tol()).unwrap();
        for (k, (_, e)) in hat.outcomes().iter().enumerate() {
            let want = ha.outcomes()[k]
                .1
                .matrix()
                .scale_re(weights[0])
                .add(&hb.outcomes()[k].1.matrix().scale_re(weights[1]));
            worst = worst.max(e.matrix().max_abs_diff(&want));
        }
    }
    report("3a mixture channel and observable", worst, 1e-8);

    // Shared-state Holevo mixtures match the closed form.
    let mut worst_holevo = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 100_000 + trial;
        let states: Vec<State> = (0..2).map(|k| State::random(2, seed + 100 + k)).collect();
        let s1 = HolevoSpec::new(Observable::random(2, 2, seed).unwrap(), states.clone()).unwrap();
        let s2 = HolevoSpec::new(Observable::random(2, 2, seed + 10_000).unwrap(), states).unwrap();
        let weights = [0.25, 0.75];
        let closed = convex_holevo(&[s1.clone(), s2.clone()], &weights, &tol()).unwrap();
        let generic = convex_combination(
            &[
                s1.to_instrument(&tol()).unwrap(),
                s2.to_instrument(&tol()).unwrap(),
            ],
            &weights,
            &tol(),
        )
        .unwrap();
        worst_holevo =
            worst_holevo.max(closed.to_instrument(&tol()).unwrap().map_distance(&generic));
    }
    report("3b Holevo mixture closed form", worst_holevo, 1e-8);

    // Mixed-state Holevo families with one shared
    // observable are Holevo with the trace-weighted state formula.
    let mut worst_eq41 = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 110_000 + trial;
        let obs = Observable::random(2, 2, seed).unwrap();
        let s1 = HolevoSpec::new(
            obs.clone(),
            vec![State::random(3, seed + 1), State::random(3, seed + 2)],
        )
        .unwrap();
        let s2 = HolevoSpec::new(
            obs,
            vec![State::random(3, seed + 3), State::random(3, seed + 4)],
        )
        .unwrap();
        let weights = [0.45, 0.55];
        let betas = holevo_mixture_states(&[s1.clone(), s2.clone()], &weights, &tol()).unwrap();
        let mix = convex_combination(
            &[
                s1.to_instrument(&tol()).unwrap(),
                s2.to_instrument(&tol()).unwrap(),
            ],
            &weights,
            &tol(),
        )
        .unwrap();
        let detected = detect_holevo(&mix, &tol()).expect("shared-observable mixture is Holevo");
        for (got, want) in detected.states().iter().zip(&betas) {
            worst_eq41 = worst_eq41.max(got.matrix().max_abs_diff(want.as_ref().unwrap().matrix()));
        }
    }
    report("3c mixture state formula", worst_eq41, 1e-8);
}

#[test]
fn criterion_04_tensor_suite() {
    let mut worst_hat = 0.0f64;
    let mut worst_marginal = 0.0f64;
    let mut worst_scaled = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 120_000 + trial;
        let i = Instrument::random(2, 2, 2, 2, seed).unwrap();
        let j = Instrument::random(2, 3, 2, 2, seed + 10_000).unwrap();
        let k = tensor_instrument(&i, &j, &tol()).unwrap();

        // (i) K̂_xy = Î_x ⊗ Ĵ_y.
        let hat = k.measured_biobservable(&tol()).unwrap();
        let hi = i.measured_observable(&tol()).unwrap();
        let hj = j.measured_observable(&tol()).unwrap();
        for (ix, (_, ei)) in hi.outcomes().iter().enumerate() {
            for (iy, (_, ej)) in hj.outcomes().iter().enumerate() {
                worst_hat = worst_hat.max(
                    hat.get(ix, iy)
                        .matrix()
                        .max_abs_diff(&kron(ei.matrix(), ej.matrix())),
                );
            }
        }

        // (ii) K¹₁x(ρ) = I_x[tr_{H2}(ρ)] and K²₂y(ρ) = J_y[tr_{H1}(ρ)].
        let mm = k.mixed_marginals(2, 3, &tol()).unwrap();
        let rho = State::random(4, seed + 20_000);
        let tr2 = qinstruments::linalg::partial_trace(rho.matrix(), 2, 2, Keep::First).unwrap();
        let tr1 = qinstruments::linalg::partial_trace(rho.matrix(), 2, 2, Keep::Second).unwrap();
        for (ix, (_, op)) in i.outcomes().iter().enumerate() {
            let got = mm.first_factor_by_x.outcomes()[ix]
                .1
                .apply(rho.matrix())
                .unwrap();
            worst_marginal = worst_marginal.max(got.max_abs_diff(&op.apply(&tr2).unwrap()));
        }
        for (iy, (_, op)) in j.outcomes().iter().enumerate() {
            let got = mm.second_factor_by_y.outcomes()[iy]
                .1
                .apply(rho.matrix())
                .unwrap();
            worst_marginal = worst_marginal.max(got.max_abs_diff(&op.apply(&tr1).unwrap()));
        }

        // (iii) (1/n2)·K¹₁x(ρ1⊗I) = I_x(ρ1) and (1/n1)·K²₂y(I⊗ρ2) = J_y(ρ2).
        let rho1 = State::random(2, seed + 30_000);
        let rho2 = State::random(2, seed + 40_000);
        let lifted1 = kron(rho1.matrix(), &ComplexMatrix::identity(2));
        let lifted2 = kron(&ComplexMatrix::identity(2), rho2.matrix());
        for (ix, (_, op)) in i.outcomes().iter().enumerate() {
            let got = mm.first_factor_by_x.outcomes()[ix]
                .1
                .apply(&lifted1)
                .unwrap()
                .scale_re(0.5);
            worst_scaled = worst_scaled.max(got.max_abs_diff(&op.apply(rho1.matrix()).unwrap()));
        }
        for (iy, (_, op)) in j.outcomes().iter().enumerate() {
            let got = mm.second_factor_by_y.outcomes()[iy]
                .1
                .apply(&lifted2)
                .unwrap()
                .scale_re(0.5);
            worst_scaled = worst_scaled.max(got.max_abs_diff(&op.apply(rho2.matrix()).unwrap()));
        }
    }
    report("4a tensor measured bi-observable", worst_hat, 1e-8);
    report("4b tensor reduced marginals", worst_marginal, 1e-8);
    report("4c tensor scaled identities", worst_scaled, 1e-8);
}

#[test]
fn criterion_05_family_closed_forms() {
    let mut worst_hh = 0.0f64;
    let mut worst_kk = 0.0f64;
    let mut worst_ah = 0.0f64;
    let mut worst_ha = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 130_000 + trial;

        // Holevo ∘ Holevo.
        let h1 = HolevoSpec::random(2, 2, 2, seed).unwrap();
        let h2 = HolevoSpec::random(2, 2, 2, seed + 10_000).unwrap();
        let closed = holevo_compose_closed_form(&h1, &h2, &tol()).unwrap();
        let generic = h1
            .to_instrument(&tol())
            .unwrap()
            .sequential_product(&h2.to_instrument(&tol()).unwrap(), &tol())
            .unwrap();
        worst_hh = worst_hh.max(
            closed
                .to_bi_instrument(&tol())
                .unwrap()
                .map_distance(&generic),
        );

        // Kraus ∘ Kraus: L_xy = J_y·K_x.
        let ks = KrausSpec::random(2, 3, 2, seed + 20_000).unwrap();
        let js = KrausSpec::random(3, 2, 2, seed + 30_000).unwrap();
        let seq = ks
            .to_instrument(&tol())
            .unwrap()
            .sequential_product(&js.to_instrument(&tol()).unwrap(), &tol())
            .unwrap();
        for (x, (_, kx)) in ks.operators().iter().enumerate() {
            for (y, (_, jy)) in js.operators().iter().enumerate() {
                let closed_op = Operation::new_unchecked(2, 2, vec![jy.mul(kx)]);
                worst_kk = worst_kk.max(seq.get(x, y).map_distance(&closed_op));
            }
        }

        // Arbitrary ∘ Holevo.
        let k = Instrument::random(2, 3, 2, 2, seed + 40_000).unwrap();
        let h = HolevoSpec::random(3, 2, 2, seed + 50_000).unwrap();
        let closed = arbitrary_then_holevo(&k, &h, &tol()).unwrap();
        let generic = k
            .sequential_product(&h.to_instrument(&tol()).unwrap(), &tol())
            .unwrap();
        worst_ah = worst_ah.max(
            closed
                .to_bi_instrument(&tol())
                .unwrap()
                .map_distance(&generic),
        );

        // Holevo ∘ arbitrary.
        let h = HolevoSpec::random(2, 3, 2, seed + 60_000).unwrap();
        let k = Instrument::random(3, 2, 2, 2, seed + 70_000).unwrap();
        let closed = holevo_then_arbitrary(&h, &k, &tol()).unwrap();
        let generic = h
            .to_instrument(&tol())
            .unwrap()
            .sequential_product(&k, &tol())
            .unwrap();
        worst_ha = worst_ha.max(
            closed
                .to_bi_instrument(&tol())
                .unwrap()
                .map_distance(&generic),
        );
    }
    report("5a Holevo∘Holevo", worst_hh, 1e-8);
    report("5b Kraus∘Kraus", worst_kk, 1e-8);
    report("5c arbitrary∘Holevo", worst_ah, 1e-8);
    report("5d Holevo∘arbitrary", worst_ha, 1e-8);
}

#[test]
fn criterion_06_negative_detections() {
    // Orthogonal rank-1 effects swapped between two Holevo specs with
    // different states: the even mixture is not Holevo.
    let p0 = State::pure_basis(2, 0);
    let p1 = State::pure_basis(2, 1);
    let a = Observable::from_matrices(
        vec![
            ("x".into(), p0.matrix().clone()),
            ("y".into(), p1.matrix().clone()),
        ],
        &tol(),
    )
    .unwrap();
    let b = Observable::from_matrices(
        vec![
            ("x".into(), p1.matrix().clone()),
            ("y".into(), p0.matrix().clone()),
        ],
        &tol(),
    )
    .unwrap();
    let ha = HolevoSpec::new(a, vec![State::pure_basis(2, 0), State::random(2, 140_001)]).unwrap();
    let hb = HolevoSpec::new(b, vec![State::pure_basis(2, 1), State::random(2, 140_002)]).unwrap();
    let holevo_mix = convex_combination(
        &[
            ha.to_instrument(&tol()).unwrap(),
            hb.to_instrument(&tol()).unwrap(),
        ],
        &[0.5, 0.5],
        &tol(),
    )
    .unwrap();
    report_flag(
        "6a mixed Holevo pair rejected by detect_holevo",
        detect_holevo(&holevo_mix, &tol()).is_none(),
    );

    // Complementary-projector Kraus instruments: the even mixture is not
    // Kraus and its Choi matrices have second eigenvalue 1/2.
    let k = KrausSpec::new(
        vec![
            ("x".into(), p0.matrix().clone()),
            ("y".into(), p1.matrix().clone()),
        ],
        &tol(),
    )
    .unwrap();
    let j = KrausSpec::new(
        vec![
            ("x".into(), p1.matrix().clone()),
            ("y".into(), p0.matrix().clone()),
        ],
        &tol(),
    )
    .unwrap();
    let kraus_mix = convex_combination(
        &[
            k.to_instrument(&tol()).unwrap(),
            j.to_instrument(&tol()).unwrap(),
        ],
        &[0.5, 0.5],
        &tol(),
    )
    .unwrap();
    let rejected = detect_kraus(&kraus_mix, &tol()).is_none();
    let mut second_eig = f64::INFINITY;
    for (_, op) in kraus_mix.outcomes() {
        let (lambda, _) = hermitian_eig(&op.choi(), &tol()).unwrap();
        second_eig = second_eig.min(lambda[lambda.len() - 2]);
    }
    report_flag(
        "6b projector mixture rejected by detect_kraus",
        rejected && second_eig > 0.1,
    );
}

#[test]
fn criterion_07_coexistence_constructions() {
    let mut worst = 0.0f64;
    let mut planted_caught = true;
    for trial in 0..TRIALS as u64 {
        let seed = 150_000 + trial;

        // Trivial-partner joint.
        let i = Instrument::random(2, 2, 2, 2, seed).unwrap();
        let betas = random_betas(2, 2, seed + 10_000);
        let j = trivial(2, &betas, &tol()).unwrap();
        let k = trivial_joint(&i, &betas, &tol()).unwrap();
        let cert = verify_joint_instrument(&k, &i, &j, 2, 2, &tol()).unwrap();
        worst = worst.max(cert.max_residual());

        // Post-processing transfer.
        let lambda = vec![vec![0.6, 0.4], vec![0.15, 0.85]];
        let labels = vec!["u".to_string(), "v".to_string()];
        let l = postprocess_joint(&k, &lambda, &labels, &tol()).unwrap();
        let p = i.post_process(&lambda, &labels, &tol()).unwrap();
        let cert = verify_joint_instrument(&l, &p, &j, 2, 2, &tol()).unwrap();
        worst = worst.max(cert.max_residual());

        // Conditioning transfer.
        let upstream = Instrument::random(3, 2, 2, 2, seed + 20_000).unwrap();
        let m = condition_joint(&k, &upstream, &tol()).unwrap();
        let ci = conditioned(&i, &upstream, &tol()).unwrap();
        let cj = conditioned(&j, &upstream, &tol()).unwrap();
        let cert = verify_joint_instrument(&m, &ci, &cj, 2, 2, &tol()).unwrap();
        worst = worst.max(cert.max_residual());

        // Observable-level transfer through a random instrument.
        let z = random_sharp_observable(3, seed + 30_000);
        let c = commuting_joint(&z, &z, &tol()).unwrap();
        let inst = Instrument::random(2, 3, 2, 2, seed + 40_000).unwrap();
        let d = observable_joint_transfer(&c, &inst, &tol()).unwrap();
        let cond = conditioned_observable(&z, &inst, &tol()).unwrap();
        let obs_cert = verify_joint_biobservable(&d, &cond, &cond, &tol()).unwrap();
        worst = worst.max(obs_cert.max_residual());

        // The conditioned/measured joint bi-observable.
        let a = Observable::random(3, 2, seed + 50_000).unwrap();
        let b = measured_conditioned_joint(&inst, &a, &tol()).unwrap();
        let hat = inst.measured_observable(&tol()).unwrap();
        let cond = conditioned_observable(&a, &inst, &tol()).unwrap();
        let obs_cert = verify_joint_biobservable(&b, &hat, &cond, &tol()).unwrap();
        worst = worst.max(obs_cert.max_residual());

        // Planted violations at 1e-2 must always be caught.
        let mut grid = k.grid().to_vec();
        grid[0] = grid[0].scale(1.0 + 1e-2);
        let violated =
            BiInstrument::new_unchecked(2, 4, k.labels1().to_vec(), k.labels2().to_vec(), grid);
        let bad_cert = verify_joint_instrument(&violated, &i, &j, 2, 2, &tol()).unwrap();
        planted_caught &= !bad_cert.pass;

        let mut obs_grid: Vec<Effect> = b.grid().to_vec();
        obs_grid[0] = Effect::new_unchecked(
            obs_grid[0]
                .matrix()
                .add(&ComplexMatrix::scaled_identity(2, 1e-2)),
        );
        let violated_obs =
            BiObservable::new_unchecked(2, b.labels1().to_vec(), b.labels2().to_vec(), obs_grid);
        let bad_obs = verify_joint_biobservable(&violated_obs, &hat, &cond, &tol()).unwrap();
        planted_caught &= !bad_obs.pass;
    }
    report("7a joint constructions verify", worst, 1e-8);
    report_flag("7b planted 1e-2 violations caught", planted_caught);
}

#[test]
fn criterion_08_sharp_conditioning_commutes() {
    let mut worst = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 160_000 + trial;
        let sharp = random_sharp_observable(3, seed);
        let inst = lueders(&sharp, &tol()).unwrap();
        let target = Observable::random(3, 2, seed + 10_000).unwrap();
        let hat = inst.measured_observable(&tol()).unwrap();
        let cond = conditioned_observable(&target, &inst, &tol()).unwrap();
        for (_, e1) in hat.outcomes() {
            for (_, e2) in cond.outcomes() {
                let comm = e1
                    .matrix()
                    .mul(e2.matrix())
                    .sub(&e2.matrix().mul(e1.matrix()));
                worst = worst.max(comm.max_abs_entry());
            }
        }
    }
    report("8 sharp instrument commutation", worst, 1e-8);
}

#[test]
fn criterion_09_commuting_holevo_pairs() {
    let mut worst_fixed = 0.0f64;
    let mut worst_comm = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 170_000 + trial;
        let dim = 2 + (trial % 2) as usize;
        // Identity-observable Holevo pair with a shared state: the designed
        // commuting family.
        let gamma = State::random(dim, seed);
        let a = Observable::new(
            vec![
                ("a0".into(), Effect::scaled_identity(dim, 0.3)),
                ("a1".into(), Effect::scaled_identity(dim, 0.7)),
            ],
            &tol(),
        )
        .unwrap();
        let b = Observable::new(
            vec![
                ("b0".into(), Effect::scaled_identity(dim, 0.45)),
                ("b1".into(), Effect::scaled_identity(dim, 0.55)),
            ],
            &tol(),
        )
        .unwrap();
        let i = HolevoSpec::new(a.clone(), vec![gamma.clone(); 2])
            .unwrap()
            .to_instrument(&tol())
            .unwrap();
        let j = HolevoSpec::new(b.clone(), vec![gamma; 2])
            .unwrap()
            .to_instrument(&tol())
            .unwrap();
        // The two composition orders agree as map grids.
        let ij = i.sequential_product(&j, &tol()).unwrap();
        let ji = j.sequential_product(&i, &tol()).unwrap();
        assert!(ij.map_distance(&ji.transpose()) < 1e-10);

        // Conditioning on the commuting partner is a fixed point.
        let ihat = i.measured_observable(&tol()).unwrap();
        let jhat = j.measured_observable(&tol()).unwrap();
        worst_fixed = worst_fixed.max(
            conditioned_observable(&ihat, &j, &tol())
                .unwrap()
                .distance(&ihat),
        );
        worst_fixed = worst_fixed.max(
            conditioned_observable(&jhat, &i, &tol())
                .unwrap()
                .distance(&jhat),
        );

        // Commuting compositions force commuting observables.
        for (_, ax) in a.outcomes() {
            for (_, by) in b.outcomes() {
                let comm = ax
                    .matrix()
                    .mul(by.matrix())
                    .sub(&by.matrix().mul(ax.matrix()));
                worst_comm = worst_comm.max(comm.max_abs_entry());
            }
        }
    }
    report(
        "9a conditioned observables are fixed points",
        worst_fixed,
        1e-8,
    );
    report(
        "9b commuting pairs have commuting observables",
        worst_comm,
        1e-8,
    );
}

#[test]
fn criterion_10_measurement_models() {
    use qinstruments::models::{sequential_model_product, MeasurementModel};

    let mut worst_obs = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 180_000 + trial;
        let aux = 2 + (trial % 2) as usize;
        let interaction = Instrument::random(2, 2 * aux, 2, 2, seed).unwrap();
        let probe = Observable::random(aux, 2, seed + 10_000).unwrap();
        let model = MeasurementModel::new(2, aux, interaction, probe).unwrap();
        // M̂¹₁x = Ī*(I⊗P_x) matches the reduced-marginal computation.
        let direct = model.measured_observable(&tol()).unwrap();
        let via_marginal = model
            .measured_instrument(&tol())
            .unwrap()
            .measured_observable(&tol())
            .unwrap();
        worst_obs = worst_obs.max(direct.distance(&via_marginal));
    }
    report("10a model observable vs reduced marginal", worst_obs, 1e-8);

    // Holevo-interaction closed form: M̂¹₁x = Σ_y tr[α_y(I⊗P_x)]·A_y, a
    // post-processing of A whose weights sum to one.
    let mut worst_weights = 0.0f64;
    let mut worst_closed = 0.0f64;
    for trial in 0..TRIALS as u64 {
        let seed = 190_000 + trial;
        let spec = HolevoSpec::random(2, 4, 2, seed).unwrap();
        let interaction = spec.to_instrument(&tol()).unwrap();
        let probe = Observable::random(2, 2, seed + 10_000).unwrap();
        let model = MeasurementModel::new(2, 2, interaction, probe.clone()).unwrap();
        let hat = model.measured_observable(&tol()).unwrap();
        let identity2 = ComplexMatrix::identity(2);
        for (x, (_, px)) in probe.outcomes().iter().enumerate() {
            let lifted = kron(&identity2, px.matrix());
            let mut want = ComplexMatrix::zeros(2, 2);
            for (y, (_, ay)) in spec.observable().outcomes().iter().enumerate() {
                let weight = spec.states()[y].matrix().mul(&lifted).trace().re;
                want = want.add(&ay.matrix().scale_re(weight));
            }
            worst_closed = worst_closed.max(hat.outcomes()[x].1.matrix().max_abs_diff(&want));
        }
        for alpha in spec.states() {
            let total: f64 = probe
                .outcomes()
                .iter()
                .map(|(_, px)| {
                    alpha
                        .matrix()
                        .mul(&kron(&identity2, px.matrix()))
                        .trace()
                        .re
                })
                .sum();
            worst_weights = worst_weights.max((total - 1.0).abs());
        }
    }
    report("10b Holevo-interaction closed form", worst_closed, 1e-8);
    report(
        "10c post-processing weights sum to one",
        worst_weights,
        1e-9,
    );

    // Sequential model product at dims (2, 2, 2): measured observable equals
    // the nested dual formula.
    let mut worst_nested = 0.0f64;
    for trial in 0..20u64 {
        let seed = 200_000 + trial;
        let m = MeasurementModel::new(
            2,
            2,
            Instrument::random(2, 4, 2, 2, seed).unwrap(),
            Observable::random(2, 2, seed + 10_000).unwrap(),
        )
        .unwrap();
        let m1 = MeasurementModel::new(
            4,
            2,
            Instrument::random(4, 8, 2, 2, seed + 20_000).unwrap(),
            Observable::random(2, 2, seed + 30_000).unwrap(),
        )
        .unwrap();
        let product = sequential_model_product(&m, &m1, &tol()).unwrap();
        let hat = product.measured_observable(&tol()).unwrap();
        let chan = m.interaction().channel();
        let chan1 = m1.interaction().channel();
        let mut idx = 0;
        for (_, px) in m.probe().outcomes() {
            for (_, py) in m1.probe().outcomes() {
                let lifted = kron(&ComplexMatrix::identity(2), &kron(px.matrix(), py.matrix()));
                let want = chan
                    .dual_apply(&chan1.dual_apply(&lifted).unwrap())
                    .unwrap();
                worst_nested = worst_nested.max(hat.outcomes()[idx].1.matrix().max_abs_diff(&want));
                idx += 1;
            }
        }
    }
    report("10d sequential model product", worst_nested, 1e-7);
}
