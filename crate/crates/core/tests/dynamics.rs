mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssasl_core::dynamics::{angle_index, eval_f, eval_jacobian, speed_index, DeviationState};
use ssasl_core::netmodel::{augment_and_reduce, Dispatch};
use ssasl_core::options::PowerFlowOptions;
use ssasl_core::powerflow::{init_classic_model, solve_power_flow, ReducedClassicModel};

fn model(case: &ssasl_core::netmodel::PowerSystemCase) -> ReducedClassicModel {
    let pf = solve_power_flow(case, &Dispatch::new(), &PowerFlowOptions::default()).unwrap();
    let net = augment_and_reduce(case, &pf).unwrap();
    init_classic_model(case, &pf, &net)
}

/// Swing equations evaluated from phasors: P_e = Re(E conj(Y_r E)).
fn phasor_f(m: &ReducedClassicModel, x: &[f64]) -> Vec<f64> {
    let n = m.n;
    let e: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(m.e_mag[i], m.delta_s[i] + x[2 * i])).collect();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        let inj: Complex64 = (0..n).map(|j| m.y_r[(i, j)] * e[j]).sum();
        let pe = (e[i] * inj.conj()).re;
        let w = x[2 * i + 1];
        out[2 * i] = m.omega_s * w;
        out[2 * i + 1] = (m.pm[i] - pe - m.d[i] * w) / (2.0 * m.h[i]);
    }
    out
}

fn finite_difference(m: &ReducedClassicModel, x: &[f64], h: f64) -> DMatrix<f64> {
    let k = x.len();
    let mut j = DMatrix::zeros(k, k);
    for c in 0..k {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[c] += h;
        xm[c] -= h;
        let fp = eval_f(m, &DeviationState::new(xp).unwrap());
        let fm = eval_f(m, &DeviationState::new(xm).unwrap());
        for r in 0..k {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

#[test]
fn state_layout_interleaves_angle_and_speed() {
    assert_eq!((angle_index(0), speed_index(0), angle_index(3), speed_index(3)), (0, 1, 6, 7));
    let s = DeviationState::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!((s.angle(1), s.speed(0), s.n_machines()), (0.3, 0.2, 2));
    assert!(DeviationState::new(vec![0.0; 3]).is_err());
    assert!(DeviationState::new(vec![f64::NAN, 0.0]).is_err());
}

#[test]
fn equilibrium_is_a_fixed_point() {
    for case in [common::ieee9(), common::ne39()] {
        let m = model(&case);
        let f = eval_f(&m, &DeviationState::origin(m.n));
        assert!(f.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn jacobian_matches_finite_differences_at_random_states() {
    for case in [common::ieee9(), common::ne39()] {
        let m = model(&case);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let x: Vec<f64> = (0..m.n)
                .flat_map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-0.05..0.05)])
                .collect();
            let j = eval_jacobian(&m, &DeviationState::new(x.clone()).unwrap());
            let fd = finite_difference(&m, &x, 1e-6);
            let rel = (&j - &fd).amax() / j.amax();
            assert!(rel < 1e-6, "{}: relative error {rel:e}", case.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vector_field_matches_phasor_evaluator(seed in any::<u64>()) {
        let m = model(&common::ieee9());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2 * m.n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lib = eval_f(&m, &DeviationState::new(x.clone()).unwrap());
        let ora = phasor_f(&m, &x);
        for (a, b) in lib.iter().zip(&ora) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_angle_shift_leaves_accelerations_unchanged(shift in -3.0f64..3.0, seed in any::<u64>()) {
        let m = model(&common::ieee9());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2 * m.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = x.clone();
        for i in 0..m.n {
            y[angle_index(i)] += shift;
        }
        let fx = eval_f(&m, &DeviationState::new(x).unwrap());
        let fy = eval_f(&m, &DeviationState::new(y).unwrap());
        for (a, b) in fx.iter().zip(&fy) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn angle_block_rows_sum_to_zero(seed in any::<u64>()) {
        let m = model(&common::ieee9());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2 * m.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let j = eval_jacobian(&m, &DeviationState::new(x).unwrap());
        for i in 0..m.n {
            let s: f64 = (0..m.n).map(|k| j[(speed_index(i), angle_index(k))]).sum();
            prop_assert!(s.abs() < 1e-9);
        }
    }
}
