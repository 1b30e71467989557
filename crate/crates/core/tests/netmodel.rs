mod common;

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssasl_core::linalg::{mat_vec, CMatrix};
use ssasl_core::netmodel::{augment_and_reduce, build_admittance, parse_case, Dispatch, PowerSystemCase};
use ssasl_core::options::PowerFlowOptions;
use ssasl_core::powerflow::solve_power_flow;
use ssasl_core::Error;

use common::{ieee9, max_abs_diff, ne39};

/// Sparse triplet assembly of the bus admittance matrix, one branch at a
/// time, written from the two-port equations of a tapped pi section.
fn stamped_ybus(case: &PowerSystemCase) -> HashMap<(usize, usize), Complex64> {
    let pos: HashMap<u32, usize> = case.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
    let mut y: HashMap<(usize, usize), Complex64> = HashMap::new();
    let mut add = |r: usize, c: usize, v: Complex64| *y.entry((r, c)).or_default() += v;
    for br in &case.branches {
        let z = Complex64::new(br.r, br.x);
        let series = Complex64::new(1.0, 0.0) / z;
        let shunt = Complex64::new(0.0, 0.5 * br.b);
        let a = br.tap;
        let (i, j) = (pos[&br.from], pos[&br.to]);
        // I_i = (y + jb/2)/a² V_i − y/a V_j ; I_j = −y/a V_i + (y + jb/2) V_j
        add(i, i, (series + shunt) / (a * a));
        add(i, j, -series / a);
        add(j, i, -series / a);
        add(j, j, series + shunt);
    }
    for (k, b) in case.buses.iter().enumerate() {
        if b.g_shunt != 0.0 || b.b_shunt != 0.0 {
            add(k, k, Complex64::new(b.g_shunt, b.b_shunt));
        }
    }
    y
}

#[test]
fn ybus_matches_stamping_oracle_on_39_bus() {
    let case = ne39();
    let dense = build_admittance(&case);
    let sparse = stamped_ybus(&case);
    let n = case.n_buses();
    for r in 0..n {
        for c in 0..n {
            let want = sparse.get(&(r, c)).copied().unwrap_or_default();
            assert!((dense[(r, c)] - want).norm() < 1e-12, "entry ({r},{c})");
        }
    }
}

#[test]
fn ybus_rows_of_untapped_shuntless_network_sum_to_zero() {
    let case = parse_case(
        r#"{"base_mva": 100, "f_nominal_hz": 60,
            "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "pq"}, {"id": 3, "kind": "pq"}],
            "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1},
                         {"from": 2, "to": 3, "r": 0.02, "x": 0.2},
                         {"from": 1, "to": 3, "r": 0.0, "x": 0.3}],
            "generators": [{"bus": 1, "p_mw": 0, "h": 3, "xd_prime": 0.2}]}"#,
    )
    .unwrap();
    let y = build_admittance(&case);
    for r in 0..3 {
        let s: Complex64 = (0..3).map(|c| y[(r, c)]).sum();
        assert!(s.norm() < 1e-12);
        for c in 0..3 {
            assert!((y[(r, c)] - y[(c, r)]).norm() < 1e-15);
        }
    }
}

#[test]
fn reduced_matrix_reproduces_full_network_injections() {
    for case in [ieee9(), ne39()] {
        let pf = solve_power_flow(&case, &Dispatch::new(), &PowerFlowOptions::default()).unwrap();
        let net = augment_and_reduce(&case, &pf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = case.n_generators();
        for _ in 0..100 {
            let e: Vec<Complex64> = (0..m)
                .map(|_| Complex64::from_polar(rng.gen_range(0.8..1.2), rng.gen_range(-1.5..1.5)))
                .collect();
            let v = net.solve_from_internal(&e).unwrap();
            let direct: Vec<Complex64> = net
                .terminal
                .iter()
                .zip(&net.source_admittance)
                .zip(&e)
                .map(|((&t, ys), ek)| ys * (ek - v[t]))
                .collect();
            let reduced = net.internal_currents(&e);
            assert!(max_abs_diff(&direct, &reduced) < 1e-9, "{}", case.name);
        }
    }
}

#[test]
fn terminal_reduction_and_back_substitution_are_consistent() {
    let case = ieee9();
    let pf = solve_power_flow(&case, &Dispatch::new(), &PowerFlowOptions::default()).unwrap();
    let net = augment_and_reduce(&case, &pf).unwrap();
    let v_t: Vec<Complex64> = net.terminal.iter().map(|&k| pf.voltage[k]).collect();
    let v_ng = mat_vec(&net.non_gen_map, &v_t);
    let expected: Vec<Complex64> = net.non_gen.iter().map(|&k| pf.voltage[k]).collect();
    assert!(max_abs_diff(&v_ng, &expected) < 1e-10);
    let i_t = mat_vec(&net.y_terminal, &v_t);
    assert!(net.kcl_residual(&v_t, &v_ng, &i_t) < 1e-12);
    // Generator currents leaving the terminals into the network.
    let i_pf: Vec<Complex64> = net
        .terminal
        .iter()
        .zip(&pf.gen_power_mva)
        .map(|(&k, s)| (s / case.base_mva / pf.voltage[k]).conj())
        .collect();
    assert!(max_abs_diff(&i_t, &i_pf) < 1e-9);
}

#[test]
fn reduced_matrix_is_symmetric_without_phase_shifters() {
    let case = ne39();
    let pf = solve_power_flow(&case, &Dispatch::new(), &PowerFlowOptions::default()).unwrap();
    let y: CMatrix = augment_and_reduce(&case, &pf).unwrap().y_r;
    assert!((&y - y.transpose()).iter().all(|z| z.norm() < 1e-9));
}

#[test]
fn case_validation_rejects_structural_errors() {
    let base = r#"{"base_mva": 100, "f_nominal_hz": 60,
        "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "pv"}],
        "branches": [{"from": 1, "to": 2, "r": 0, "x": 0.1}],
        "generators": [{"bus": 1, "p_mw": 0, "h": 3, "d": 0.6, "xd_prime": 0.2},
                       {"bus": 2, "p_mw": 10, "h": 2, "d": 0.4, "xd_prime": 0.2}]}"#;
    parse_case(base).unwrap();
    let non_uniform = base.replace(r#""d": 0.4"#, r#""d": 0.5"#);
    assert!(matches!(parse_case(&non_uniform), Err(Error::Invariant { .. })));
    let orphan_pv = base.replace(
        r#",
                       {"bus": 2, "p_mw": 10, "h": 2, "d": 0.4, "xd_prime": 0.2}"#,
        "",
    );
    assert!(matches!(parse_case(&orphan_pv), Err(Error::Invariant { .. })));
    let islanded = base.replace(r#"[{"from": 1, "to": 2, "r": 0, "x": 0.1}]"#, "[]");
    assert!(matches!(parse_case(&islanded), Err(Error::Invariant { .. })));
    let unknown = base.replace(r#""base_mva""#, r#""colour": 1, "base_mva""#);
    assert!(matches!(parse_case(&unknown), Err(Error::Schema(_))));
}
