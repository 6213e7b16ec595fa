use nalgebra::DMatrix;
use proptest::prelude::*;

use wstate::entangle::{
    apply_local_phases, concurrence, entanglement_report, gamma_biseparable, optimize_local_phases,
    simple_witness_value,
};
use wstate::hilbert::{qubit_dims, C64};
use wstate::ionsim::{apply_pulse, prepare_w_sequence, w_state, JointState, PulseOp};
use wstate::tomo::{mle_reconstruct, sample_dataset, MleConfig};
use wstate::{fidelity_pure, partial_trace, DensityMatrix, PureState, Tensor};

fn density(dims: Vec<usize>, raw: &[f64]) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = DMatrix::from_fn(d, d, |r, c| {
        C64::new(raw[2 * (r * d + c)], raw[2 * (r * d + c) + 1])
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr, dims).unwrap()
}

fn rho_strategy(dims: Vec<usize>) -> impl Strategy<Value = DensityMatrix> {
    let d: usize = dims.iter().product();
    prop::collection::vec(-1.0..1.0f64, 2 * d * d).prop_map(move |raw| density(dims.clone(), &raw))
}

fn unitary(a: f64, b: f64, g: f64, t: f64) -> DMatrix<C64> {
    let e = |x: f64| C64::from_polar(1.0, x);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            e(a + b) * t.cos(),
            e(a + g) * t.sin(),
            -e(a - g) * t.sin(),
            e(a - b) * t.cos(),
        ],
    )
}

fn angle() -> impl Strategy<Value = f64> {
    -3.2..3.2f64
}

fn pure_qubit() -> impl Strategy<Value = PureState> {
    (angle(), angle(), angle(), angle())
        .prop_map(|(a, b, c, d)| {
            PureState::normalized(vec![C64::new(a, b), C64::new(c, d)], qubit_dims(1)).unwrap()
        })
        .prop_filter("non-zero", |p| p.norm_sqr() > 0.0)
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_preserves_trace(rho in rho_strategy(qubit_dims(3)), mask in 1usize..7) {
        let keep: Vec<usize> = (0..3).filter(|k| mask >> k & 1 == 1).collect();
        let r = partial_trace(&rho, &keep).unwrap();
        prop_assert!((r.trace().re - 1.0).abs() < 1e-12);
        r.validate().unwrap();
    }

    #[test]
    fn local_unitaries_preserve_spectrum(
        rho in rho_strategy(vec![2, 3]),
        (a, b, g, t) in (angle(), angle(), angle(), angle()),
    ) {
        let u = unitary(a, b, g, t);
        let rotated = rho.apply_local_unitary(0, &u).unwrap();
        for (x, y) in rho.eigenvalues().iter().zip(rotated.eigenvalues()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn tensor_product_is_associative(a in pure_qubit(), b in pure_qubit(), c in pure_qubit()) {
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn pulses_compose_and_preserve_norm(
        prep in prop::collection::vec(0.0..6.3f64, 3),
        t1 in 0.0..4.0f64,
        t2 in 0.0..4.0f64,
        phase in angle(),
        ion in 1usize..=3,
        blue in any::<bool>(),
    ) {
        let mut s = JointState::ground(3, 2).unwrap();
        for (i, &t) in prep.iter().enumerate() {
            s = apply_pulse(&s, &PulseOp::carrier(i + 1, t, 0.3 * i as f64)).unwrap();
        }
        let pulse = |t| if blue { PulseOp::blue(ion, t, phase) } else { PulseOp::carrier(ion, t, phase) };
        let two = apply_pulse(&apply_pulse(&s, &pulse(t1)).unwrap(), &pulse(t2)).unwrap();
        let one = apply_pulse(&s, &pulse(t1 + t2)).unwrap();
        prop_assert!((two.state().norm_sqr() - 1.0).abs() < 1e-12);
        for (x, y) in two.state().amplitudes().iter().zip(one.state().amplitudes()) {
            prop_assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn blue_sideband_leaves_ground_register_alone(t in 0.0..20.0f64, phase in angle(), ion in 1usize..=4) {
        let mut levels = vec![0; 4];
        levels[0] = 0;
        let s = JointState::basis(&levels, 0, 2).unwrap();
        let out = apply_pulse(&s, &PulseOp::blue(ion, t, phase)).unwrap();
        for (x, y) in out.state().amplitudes().iter().zip(s.state().amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn concurrence_is_local_unitary_invariant(
        rho in rho_strategy(qubit_dims(2)),
        u in (angle(), angle(), angle(), angle()),
        v in (angle(), angle(), angle(), angle()),
    ) {
        let c0 = concurrence(&rho).unwrap();
        let r = rho
            .apply_local_unitary(0, &unitary(u.0, u.1, u.2, u.3)).unwrap()
            .apply_local_unitary(1, &unitary(v.0, v.1, v.2, v.3)).unwrap();
        prop_assert!((c0 - concurrence(&r).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn product_states_have_zero_concurrence(a in pure_qubit(), b in pure_qubit()) {
        let c = concurrence(&a.tensor(&b).to_density()).unwrap();
        prop_assert!(c.abs() <= 1e-7);
    }

    #[test]
    fn maximally_entangled_states_have_unit_concurrence(u in (angle(), angle(), angle(), angle())) {
        let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let bell = PureState::new(vec![h, C64::new(0.0, 0.0), C64::new(0.0, 0.0), h], qubit_dims(2)).unwrap();
        let rotated = bell.apply_local_unitary(1, &unitary(u.0, u.1, u.2, u.3)).unwrap();
        let c = concurrence(&rotated.to_density()).unwrap();
        prop_assert!((c - 1.0).abs() <= 1e-10, "c = {c}");
    }

    #[test]
    fn simple_witness_sign_matches_threshold(n in 3usize..=5, raw in prop::collection::vec(-1.0..1.0f64, 2 * 32 * 32), w in 0.0..1.0f64) {
        let dims = qubit_dims(n);
        let d = 1usize << n;
        let noise = density(dims.clone(), &raw[..2 * d * d]);
        let rho = w_state(n).unwrap().to_density().mix(&noise, w).unwrap();
        let f = fidelity_pure(&rho, &w_state(n).unwrap()).unwrap();
        let sw = simple_witness_value(&rho).unwrap();
        prop_assert_eq!(sw, (n as f64 - 1.0) / n as f64 - f);
        prop_assert_eq!(sw < 0.0, f > (n as f64 - 1.0) / n as f64);
    }

    #[test]
    fn phase_optimization_never_loses_fidelity(rho in rho_strategy(qubit_dims(4))) {
        let zero = fidelity_pure(&rho, &w_state(4).unwrap()).unwrap();
        let (phases, f) = optimize_local_phases(&rho).unwrap();
        prop_assert!(f >= zero - 1e-12);
        let again = fidelity_pure(&apply_local_phases(&rho, &phases).unwrap(), &w_state(4).unwrap()).unwrap();
        prop_assert!((again - f).abs() < 1e-12);
    }

    #[test]
    fn report_min_is_at_most_mean(rho in rho_strategy(qubit_dims(3))) {
        let r = entanglement_report(&rho).unwrap();
        prop_assert!(r.projected.min <= r.projected.mean);
        prop_assert!(r.reduced.min <= r.reduced.mean);
        prop_assert_eq!(r.distillable, r.projected.pairs.iter().all(|p| p.value > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mle_history_never_decreases(seed in any::<u64>(), w in 0.5..1.0f64) {
        let rho = w_state(3)
            .unwrap()
            .to_density()
            .mix(&DensityMatrix::maximally_mixed(qubit_dims(3)), w)
            .unwrap();
        let ds = sample_dataset(&rho, 100, seed).unwrap();
        let res = mle_reconstruct(&ds, &MleConfig::default()).unwrap();
        prop_assert!(res.history.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(res.dilution_fallbacks <= 1);
        res.rho.validate().unwrap();
    }
}

#[test]
fn preparation_is_independent_of_fock_cutoff() {
    for n in 2..=6 {
        let reference = prepare_w_sequence(n, 1).unwrap();
        for n_max in 2..=4 {
            let s = prepare_w_sequence(n, n_max).unwrap();
            let a = wstate::ionsim::trace_out_motion(&reference);
            let b = wstate::ionsim::trace_out_motion(&s);
            assert!(
                max_diff(a.entries(), b.entries()) <= 1e-10,
                "n = {n}, n_max = {n_max}"
            );
        }
    }
}

#[test]
fn gamma_is_monotone_in_alpha() {
    for n in [3, 5, 8] {
        let beta = 2.0;
        let g: Vec<f64> = [8.0, 10.0, 12.0]
            .iter()
            .map(|&a| gamma_biseparable(n, a, beta).unwrap().gamma)
            .collect();
        assert!(
            g[0] <= g[1] + 1e-12 && g[1] <= g[2] + 1e-12,
            "n = {n}: {g:?}"
        );
    }
}
