mod common;

use num_complex::Complex64;
use ssasl_core::netmodel::{augment_and_reduce, Dispatch, PowerSystemCase};
use ssasl_core::options::PowerFlowOptions;
use ssasl_core::powerflow::{init_classic_model, internal_voltages, solve_power_flow, PfSolution};
use ssasl_core::Error;

use common::{ieee9, internal_voltage, ne39};

fn solve(case: &PowerSystemCase, d: &Dispatch) -> PfSolution {
    solve_power_flow(case, d, &PowerFlowOptions::default()).unwrap()
}

#[test]
fn nine_bus_internal_voltages_match_textbook() {
    // Anderson & Fouad, Example 2.6.
    let case = ieee9();
    let pf = solve(&case, &Dispatch::new());
    let expected = [(1.0566, 2.2717), (1.0502, 19.7315), (1.0170, 13.1752)];
    for (e, (mag, deg)) in internal_voltages(&case, &pf).iter().zip(expected) {
        assert!((e.norm() - mag).abs() < 1e-3, "{e}");
        assert!((e.arg().to_degrees() - deg).abs() < 1e-2, "{e}");
    }
}

#[test]
fn nine_bus_internal_voltages_match_hand_computation() {
    let case = ieee9();
    let pf = solve(&case, &Dispatch::new());
    let lib = internal_voltages(&case, &pf);
    for (k, g) in case.generators.iter().enumerate() {
        let bus = case.buses.iter().position(|b| b.id == g.bus).unwrap();
        let s = pf.gen_power_mva[k] / case.base_mva;
        let e = internal_voltage(pf.voltage[bus], s, g.xd_prime);
        assert!((e - lib[k]).norm() < 1e-14);
    }
}

#[test]
fn new_england_angles_match_published_solution() {
    let case = ne39();
    let pf = solve(&case, &Dispatch::new());
    // Bus voltage angles (deg) of the standard 39-bus solution.
    let published = [
        (1, -13.537), (9, -14.178), (16, -10.033), (20, -6.821), (29, -3.170), (30, -7.370),
        (31, 0.0), (34, -1.631), (36, 4.468), (38, 3.893), (39, -14.535),
    ];
    for (id, deg) in published {
        let k = pf.bus_ids.iter().position(|&b| b == id).unwrap();
        assert!((pf.voltage[k].arg().to_degrees() - deg).abs() < 2e-3, "bus {id}");
    }
    assert!((pf.slack_p_mw - 677.87).abs() < 0.05);
}

/// Losses summed branch by branch from the solved voltages.
fn branch_losses(case: &PowerSystemCase, pf: &PfSolution) -> Complex64 {
    let idx = case.bus_index();
    let mut total = Complex64::new(0.0, 0.0);
    for br in &case.branches {
        let vf = pf.voltage[idx[&br.from]] / br.tap;
        let vt = pf.voltage[idx[&br.to]];
        let ys = Complex64::new(br.r, br.x).inv();
        let yc = Complex64::new(0.0, br.b / 2.0);
        let i_f = ys * (vf - vt) + yc * vf;
        let i_t = ys * (vt - vf) + yc * vt;
        total += vf * i_f.conj() + vt * i_t.conj();
    }
    for (k, b) in case.buses.iter().enumerate() {
        total += pf.voltage[k].norm_sqr() * Complex64::new(b.g_shunt, -b.b_shunt);
    }
    total
}

#[test]
fn generation_covers_load_and_losses() {
    for case in [ieee9(), ne39()] {
        let pf = solve(&case, &Dispatch::new());
        let gen: Complex64 = pf.gen_power_mva.iter().sum::<Complex64>() / case.base_mva;
        let load: Complex64 =
            case.buses.iter().map(|b| Complex64::new(b.p_load_mw, b.q_load_mvar)).sum::<Complex64>() / case.base_mva;
        let losses = branch_losses(&case, &pf);
        assert!((gen - load - losses).norm() < 1e-6, "{}", case.name);
    }
}

#[test]
fn reduced_model_power_equals_generator_output() {
    for case in [ieee9(), ne39()] {
        let pf = solve(&case, &Dispatch::new());
        let net = augment_and_reduce(&case, &pf).unwrap();
        let model = init_classic_model(&case, &pf, &net);
        let pe = model.electrical_power(&vec![0.0; model.n]);
        for (p, s) in pe.iter().zip(&pf.gen_power_mva) {
            assert!((p - s.re / case.base_mva).abs() < 1e-6);
        }
        let total_pe: f64 = pe.iter().sum();
        let total_gen: f64 = pf.gen_p_mw().iter().sum::<f64>() / case.base_mva;
        assert!((total_pe - total_gen).abs() < 1e-6);
    }
}

#[test]
fn dispatch_moves_pv_output_and_slack_balances() {
    let case = ieee9();
    let base = solve(&case, &Dispatch::new());
    let d: Dispatch = [(3, 135.0)].into_iter().collect();
    let moved = solve(&case, &d);
    assert!((moved.gen_p_mw()[2] - 135.0).abs() < 1e-6);
    let dp = moved.slack_p_mw - base.slack_p_mw;
    assert!(dp < -45.0 && dp > -55.0, "slack change {dp}");
}

#[test]
fn dispatch_errors() {
    let case = ieee9();
    let opts = PowerFlowOptions::default();
    for d in [[(1, 50.0)], [(5, 50.0)], [(2, f64::NAN)]] {
        let d: Dispatch = d.into_iter().collect();
        assert!(matches!(solve_power_flow(&case, &d, &opts), Err(Error::Dispatch(_))));
    }
}

#[test]
fn extreme_transfer_reports_divergence() {
    let case = ieee9();
    let d: Dispatch = [(2, 5000.0)].into_iter().collect();
    let r = solve_power_flow(&case, &d, &PowerFlowOptions::default());
    assert!(matches!(r, Err(Error::PowerFlowDiverged { .. })));
    assert!(r.unwrap_err().is_numeric());
}
