use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::netmodel::{build_admittance, BusKind, Dispatch, PowerSystemCase};
use crate::options::PowerFlowOptions;

/// Converged AC power-flow state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfSolution {
    pub bus_ids: Vec<u32>,
    /// Bus voltage phasors (pu), slack angle = 0.
    pub voltage: Vec<Complex64>,
    /// Generator output P + jQ (MW, MVAr), generator order.
    pub gen_power_mva: Vec<Complex64>,
    pub slack_p_mw: f64,
    /// Number of mismatch evaluations up to and including the converged one.
    pub iterations: usize,
    /// Largest |P| / |Q| mismatch at the solution (pu).
    pub max_mismatch: f64,
}

impl PfSolution {
    pub fn gen_p_mw(&self) -> Vec<f64> {
        self.gen_power_mva.iter().map(|s| s.re).collect()
    }
}

/// Solves the power flow from a flat start with `dispatch` applied to the
/// PV generators; the slack machine absorbs the imbalance.
pub fn solve_power_flow(
    case: &PowerSystemCase,
    dispatch: &Dispatch,
    opts: &PowerFlowOptions,
) -> Result<PfSolution> {
    let p_sched = case.scheduled_mw(dispatch)?;
    let base = case.base_mva;
    let n = case.n_buses();
    let y = build_admittance(case);
    let idx = case.bus_index();

    let mut s_spec = vec![Complex64::new(0.0, 0.0); n];
    for (k, b) in case.buses.iter().enumerate() {
        s_spec[k] -= Complex64::new(b.p_load_mw, b.q_load_mvar) / base;
    }
    for (g, p) in case.generators.iter().zip(&p_sched) {
        s_spec[idx[&g.bus]] += Complex64::new(p / base, 0.0);
    }

    let pvpq: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind == BusKind::Pq).collect();

    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_setpoint })
        .collect();
    let mut va = vec![0.0; n];

    let mut mismatch = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let v: Vec<Complex64> = vm.iter().zip(&va).map(|(m, a)| Complex64::from_polar(*m, *a)).collect();
        let ibus = linalg::mat_vec(&y, &v);
        let mis: Vec<Complex64> = (0..n).map(|k| v[k] * ibus[k].conj() - s_spec[k]).collect();
        let f = DVector::from_iterator(
            pvpq.len() + pq.len(),
            pvpq.iter().map(|&k| mis[k].re).chain(pq.iter().map(|&k| mis[k].im)),
        );
        mismatch = f.amax();
        if !mismatch.is_finite() || mismatch > 1e10 {
            break;
        }
        if mismatch < opts.tolerance {
            return Ok(finish(case, &y, v, it, mismatch));
        }

        let jac = jacobian(&y, &v, &ibus, &pvpq, &pq);
        let Some(dx) = jac.lu().solve(&f) else {
            break;
        };
        for (i, &k) in pvpq.iter().enumerate() {
            va[k] -= dx[i];
        }
        for (i, &k) in pq.iter().enumerate() {
            vm[k] -= dx[pvpq.len() + i];
        }
    }
    Err(Error::PowerFlowDiverged {
        iterations: opts.max_iterations,
        mismatch,
    })
}

fn jacobian(
    y: &CMatrix,
    v: &[Complex64],
    ibus: &[Complex64],
    pvpq: &[usize],
    pq: &[usize],
) -> DMatrix<f64> {
    let j = Complex64::new(0.0, 1.0);
    let vnorm: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    // dS/dVm = diag(V) conj(Y diag(Vnorm)) + conj(diag(I)) diag(Vnorm)
    let ds_dva = |r: usize, c: usize| {
        let diag = if r == c { ibus[r] } else { Complex64::new(0.0, 0.0) };
        j * v[r] * (diag - y[(r, c)] * v[c]).conj()
    };
    let ds_dvm = |r: usize, c: usize| {
        let mut s = v[r] * (y[(r, c)] * vnorm[c]).conj();
        if r == c {
            s += ibus[r].conj() * vnorm[r];
        }
        s
    };
    let (a, b) = (pvpq.len(), pq.len());
    DMatrix::from_fn(a + b, a + b, |row, col| {
        let (r, part_im) = if row < a { (pvpq[row], false) } else { (pq[row - a], true) };
        let z = if col < a { ds_dva(r, pvpq[col]) } else { ds_dvm(r, pq[col - a]) };
        if part_im {
            z.im
        } else {
            z.re
        }
    })
}

fn finish(case: &PowerSystemCase, y: &CMatrix, v: Vec<Complex64>, iterations: usize, mismatch: f64) -> PfSolution {
    let base = case.base_mva;
    let idx = case.bus_index();
    let ibus = linalg::mat_vec(y, &v);
    let gen_power_mva: Vec<Complex64> = case
        .generators
        .iter()
        .map(|g| {
            let k = idx[&g.bus];
            let b = &case.buses[k];
            v[k] * ibus[k].conj() * base + Complex64::new(b.p_load_mw, b.q_load_mvar)
        })
        .collect();
    let slack_p_mw = gen_power_mva[case.slack_generator()].re;
    PfSolution {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        voltage: v,
        gen_power_mva,
        slack_p_mw,
        iterations,
        max_mismatch: mismatch,
    }
}
