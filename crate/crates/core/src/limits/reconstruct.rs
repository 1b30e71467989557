use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::angle_index;
use crate::error::{Error, Result};
use crate::linalg;
use crate::modal::{modal_to_state, ModalDecomposition, Side};
use crate::netmodel::AugmentedNetwork;
use crate::options::{AnalysisOptions, Ms3Options};
use crate::powerflow::{PfSolution, ReducedClassicModel};

/// Reconstruction variant.
///
/// | variant | generators              | loads                  |
/// |---------|-------------------------|------------------------|
/// | MS1     | fixed internal E        | fixed impedance        |
/// | MS2     | fixed terminal \|V_t\|  | fixed impedance        |
/// | MS3     | fixed terminal \|V_t\|  | fixed P and Q (iterated) |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ms1,
    Ms2,
    Ms3,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Ms1, Variant::Ms2, Variant::Ms3];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ms1 => "ms1",
            Variant::Ms2 => "ms2",
            Variant::Ms3 => "ms3",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ms1" => Ok(Variant::Ms1),
            "ms2" => Ok(Variant::Ms2),
            "ms3" => Ok(Variant::Ms3),
            other => Err(format!("unknown variant {other:?} (expected ms1, ms2 or ms3)")),
        }
    }
}

/// Full network steady state at one estimated limit. All phasors in pu,
/// angles in the base-case power-flow frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateAtLimit {
    pub variant: Variant,
    pub mode: usize,
    pub side: Side,
    pub delta_g: f64,
    /// Internal-voltage angles (rad), generator order.
    pub machine_angles: Vec<f64>,
    pub internal_voltage: Vec<Complex64>,
    pub terminal_voltage: Vec<Complex64>,
    pub non_gen_voltage: Vec<Complex64>,
    /// Every bus voltage, bus order.
    pub bus_voltage: Vec<Complex64>,
    pub terminal_current: Vec<Complex64>,
    /// `V_t I_t*` per generator (pu).
    pub gen_power: Vec<Complex64>,
    /// Load current and power per bus (zero where no load).
    pub load_current: Vec<Complex64>,
    pub load_power: Vec<Complex64>,
    /// Generator active power (MW).
    pub p_mw: Vec<f64>,
    /// Max residual of the partitioned network equations (pu).
    pub kcl_residual: f64,
    /// Fixed-point iterations used (MS3 only).
    pub iterations: Option<usize>,
}

impl SteadyStateAtLimit {
    /// Angle of machine `k` relative to machine `reference` (rad).
    pub fn angle_difference(&self, k: usize, reference: usize) -> f64 {
        self.machine_angles[k] - self.machine_angles[reference]
    }
}

struct Ctx<'a> {
    mode: usize,
    side: Side,
    delta_g: f64,
    base_mva: f64,
    net: &'a AugmentedNetwork,
}

/// Machine angle deviations at `(ω_g, δ_g) = (0, δ_g*)`.
fn angle_deviations(dec: &ModalDecomposition, mode: usize, delta_g: f64, realness_tol: f64) -> Result<Vec<f64>> {
    let x = modal_to_state(dec, mode, 0.0, delta_g, realness_tol)?;
    Ok((0..dec.n_machines).map(|k| x[angle_index(k)]).collect())
}

fn source_impedance(net: &AugmentedNetwork) -> Vec<Complex64> {
    net.source_admittance.iter().map(|y| y.inv()).collect()
}

/// Downstream quantities from a terminal voltage / current pair.
fn finish(
    ctx: &Ctx<'_>,
    variant: Variant,
    e: Vec<Complex64>,
    v_t: Vec<Complex64>,
    i_t: Vec<Complex64>,
    iterations: Option<usize>,
) -> SteadyStateAtLimit {
    let net = ctx.net;
    let v_ng = linalg::mat_vec(&net.non_gen_map, &v_t);
    let bus_voltage = net.scatter(&v_t, &v_ng);
    let load_current: Vec<Complex64> = bus_voltage
        .iter()
        .zip(&net.load_admittance)
        .map(|(v, y)| v * y)
        .collect();
    let load_power = bus_voltage
        .iter()
        .zip(&load_current)
        .map(|(v, i)| v * i.conj())
        .collect();
    let gen_power: Vec<Complex64> = v_t.iter().zip(&i_t).map(|(v, i)| v * i.conj()).collect();
    let p_mw = gen_power.iter().map(|s| s.re * ctx.base_mva).collect();
    let kcl_residual = net.kcl_residual(&v_t, &v_ng, &i_t);
    SteadyStateAtLimit {
        variant,
        mode: ctx.mode,
        side: ctx.side,
        delta_g: ctx.delta_g,
        machine_angles: e.iter().map(|z| z.arg()).collect(),
        internal_voltage: e,
        terminal_voltage: v_t,
        non_gen_voltage: v_ng,
        bus_voltage,
        terminal_current: i_t,
        gen_power,
        load_current,
        load_power,
        p_mw,
        kcl_residual,
        iterations,
    }
}

/// MS1 steps 1–6: internal voltages at the limit angle, their currents
/// through `Y_r` and the terminal voltages behind the source impedances.
fn ms1_terminal(
    net: &AugmentedNetwork,
    e: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let i_t = net.internal_currents(e);
    let zs = source_impedance(net);
    let v_t = e.iter().zip(&zs).zip(&i_t).map(|((e, z), i)| e - z * i).collect();
    (v_t, i_t)
}

/// Terminal magnitudes overwritten with `base_mag`, angles kept; currents by
/// the terminal-reduced admittance; internal voltages recovered behind x'd.
fn fixed_terminal(
    net: &AugmentedNetwork,
    v_t: &[Complex64],
    base_mag: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let v_upd: Vec<Complex64> = v_t
        .iter()
        .zip(base_mag)
        .map(|(v, m)| Complex64::from_polar(*m, v.arg()))
        .collect();
    let i_upd = linalg::mat_vec(&net.y_terminal, &v_upd);
    let zs = source_impedance(net);
    let e = v_upd.iter().zip(&zs).zip(&i_upd).map(|((v, z), i)| v + z * i).collect();
    (v_upd, i_upd, e)
}

fn base_terminal_magnitudes(net: &AugmentedNetwork, base: &PfSolution) -> Vec<f64> {
    net.terminal.iter().map(|&k| base.voltage[k].norm()).collect()
}

/// Fixed internal voltage magnitudes, constant-impedance loads.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_ms1(
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    net: &AugmentedNetwork,
    mode: usize,
    side: Side,
    delta_g: f64,
    base_mva: f64,
    realness_tol: f64,
) -> Result<SteadyStateAtLimit> {
    let dev = angle_deviations(dec, mode, delta_g, realness_tol)?;
    let e = model.internal_voltages(&dev);
    let (v_t, i_t) = ms1_terminal(net, &e);
    let ctx = Ctx { mode, side, delta_g, base_mva, net };
    Ok(finish(&ctx, Variant::Ms1, e, v_t, i_t, None))
}

/// Base-case terminal voltage magnitudes, constant-impedance loads.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_ms2(
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    net: &AugmentedNetwork,
    mode: usize,
    side: Side,
    delta_g: f64,
    base: &PfSolution,
    base_mva: f64,
    realness_tol: f64,
) -> Result<SteadyStateAtLimit> {
    let dev = angle_deviations(dec, mode, delta_g, realness_tol)?;
    let e = model.internal_voltages(&dev);
    let (v_t, _) = ms1_terminal(net, &e);
    let (v_upd, i_upd, e_upd) = fixed_terminal(net, &v_t, &base_terminal_magnitudes(net, base));
    let ctx = Ctx { mode, side, delta_g, base_mva, net };
    Ok(finish(&ctx, Variant::Ms2, e_upd, v_upd, i_upd, None))
}

/// Base-case terminal voltage magnitudes and base-case load powers: the
/// load impedances are re-derived from the solved voltages and the MS2
/// update is repeated until the load powers settle.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_ms3(
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    net: &AugmentedNetwork,
    mode: usize,
    side: Side,
    delta_g: f64,
    base: &PfSolution,
    base_load: &[Complex64],
    base_mva: f64,
    realness_tol: f64,
    opts: &Ms3Options,
) -> Result<SteadyStateAtLimit> {
    let dev = angle_deviations(dec, mode, delta_g, realness_tol)?;
    let e = model.internal_voltages(&dev);
    let base_mag = base_terminal_magnitudes(net, base);

    let mut current = net.clone();
    let mut relax = 1.0;
    let mut prev_residual = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=opts.max_iterations {
        iterations = it;
        let (v_t, _) = ms1_terminal(&current, &e);
        let (v_upd, i_upd, e_upd) = fixed_terminal(&current, &v_t, &base_mag);
        let v_ng = linalg::mat_vec(&current.non_gen_map, &v_upd);
        let v_bus = current.scatter(&v_upd, &v_ng);

        residual = v_bus
            .iter()
            .zip(&current.load_admittance)
            .zip(base_load)
            .map(|((v, y), s0)| (v.norm_sqr() * y.conj() - s0).norm())
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            break;
        }
        if residual < opts.tolerance {
            let ctx = Ctx { mode, side, delta_g, base_mva, net: &current };
            return Ok(finish(&ctx, Variant::Ms3, e_upd, v_upd, i_upd, Some(it)));
        }
        if residual > prev_residual && relax == 1.0 {
            relax = opts.relaxation;
        }
        prev_residual = residual;

        let target: Vec<Complex64> = v_bus
            .iter()
            .zip(base_load)
            .zip(&current.load_admittance)
            .map(|((v, s0), y_old)| {
                let y_new = s0.conj() / v.norm_sqr();
                y_old + (y_new - y_old) * relax
            })
            .collect();
        current = match current.with_load_admittance(target) {
            Ok(n) => n,
            // The iterate left the region where the network is solvable.
            Err(_) => break,
        };
    }
    Err(Error::Ms3Diverged { iterations, residual })
}

/// Runs one variant.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    variant: Variant,
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    net: &AugmentedNetwork,
    mode: usize,
    side: Side,
    delta_g: f64,
    base: &PfSolution,
    base_load: &[Complex64],
    base_mva: f64,
    opts: &AnalysisOptions,
) -> Result<SteadyStateAtLimit> {
    let tol = opts.search.realness_tol;
    match variant {
        Variant::Ms1 => reconstruct_ms1(dec, model, net, mode, side, delta_g, base_mva, tol),
        Variant::Ms2 => reconstruct_ms2(dec, model, net, mode, side, delta_g, base, base_mva, tol),
        Variant::Ms3 => reconstruct_ms3(
            dec, model, net, mode, side, delta_g, base, base_load, base_mva, tol, &opts.ms3,
        ),
    }
}
