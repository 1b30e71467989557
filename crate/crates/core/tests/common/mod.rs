#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use ssasl_core::netmodel::{Branch, Bus, BusKind, Generator, PowerSystemCase};

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

pub fn ieee9() -> PowerSystemCase {
    PowerSystemCase::load(case_path("ieee9.json")).expect("9-bus case loads")
}

pub fn ne39() -> PowerSystemCase {
    PowerSystemCase::load(case_path("new_england39.json")).expect("39-bus case loads")
}

/// Inertia of the second machine relative to the first; large enough that
/// it behaves as an infinite bus to double precision.
pub const INFINITE_BUS_RATIO: f64 = 1e13;

pub struct Smib {
    pub case: PowerSystemCase,
    pub h1: f64,
    /// Total reactance between the two internal nodes (pu).
    pub x_total: f64,
}

/// Machine behind a lossless line against a (near) infinite bus.
pub fn smib(p_mw: f64, damping_ratio: f64) -> Smib {
    let (h1, xd1, xd2, x_line) = (4.0, 0.25, 0.05, 0.3);
    let h2 = h1 * INFINITE_BUS_RATIO;
    let bus = |id, kind, v| Bus { id, kind, v_setpoint: v, p_load_mw: 0.0, q_load_mvar: 0.0, g_shunt: 0.0, b_shunt: 0.0 };
    let gen = |bus, p_mw, h: f64, xd_prime| Generator { bus, p_mw, h, d: 2.0 * h * damping_ratio, xd_prime, mva_base: None };
    let case = PowerSystemCase {
        name: "smib".into(),
        provenance: None,
        base_mva: 100.0,
        f_nominal_hz: 60.0,
        buses: vec![bus(1, BusKind::Pv, 1.02), bus(2, BusKind::Slack, 1.0)],
        branches: vec![Branch { from: 1, to: 2, r: 0.0, x: x_line, b: 0.0, tap: 1.0, shift_deg: 0.0 }],
        generators: vec![gen(1, p_mw, h1, xd1), gen(2, 0.0, h2, xd2)],
    };
    case.validate().expect("smib case is valid");
    Smib { case, h1, x_total: xd1 + x_line + xd2 }
}

/// Internal voltage behind the transient reactance, computed from terminal
/// conditions without the library.
pub fn internal_voltage(v: Complex64, s_gen: Complex64, xd: f64) -> Complex64 {
    let i = (s_gen / v).conj();
    v + Complex64::new(0.0, xd) * i
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
