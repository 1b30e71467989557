use nalgebra::DMatrix;
use num_complex::Complex64;

use super::newton::PfSolution;
use crate::linalg::CMatrix;
use crate::netmodel::{AugmentedNetwork, PowerSystemCase};

/// Parameters of the classic N-machine swing model in deviation
/// coordinates about a solved operating point.
///
/// Electrical power of machine `i` at angle deviations `x`:
///
/// ```text
/// P_ei(x) = E_i^2 G_i + sum_{j != i} [ C_ij sin(d_sij + x_i - x_j)
///                                    + D_ij cos(d_sij + x_i - x_j) ]
/// ```
///
/// with `C_ij = E_i E_j Im(Y_r,ij)`, `D_ij = E_i E_j Re(Y_r,ij)`,
/// `G_i = Re(Y_r,ii)` and `d_sij = delta_si - delta_sj`.
#[derive(Debug, Clone)]
pub struct ReducedClassicModel {
    pub n: usize,
    /// Synchronous speed (rad/s).
    pub omega_s: f64,
    /// Inertia (s, system base).
    pub h: Vec<f64>,
    /// Damping (pu, system base).
    pub d: Vec<f64>,
    /// Mechanical power (pu), equal to `P_ei(0)`.
    pub pm: Vec<f64>,
    /// Internal voltage magnitudes (pu).
    pub e_mag: Vec<f64>,
    /// Equilibrium internal-voltage angles (rad) in the power-flow frame.
    pub delta_s: Vec<f64>,
    pub g_self: Vec<f64>,
    pub c_coef: DMatrix<f64>,
    pub d_coef: DMatrix<f64>,
    pub y_r: CMatrix,
}

/// Internal voltages `E = V_t + j x'd I_t` from the solved terminal state.
pub fn internal_voltages(case: &PowerSystemCase, pf: &PfSolution) -> Vec<Complex64> {
    let idx = case.bus_index();
    case.generators
        .iter()
        .zip(&pf.gen_power_mva)
        .map(|(g, s)| {
            let v = pf.voltage[idx[&g.bus]];
            let i = (s / case.base_mva / v).conj();
            v + Complex64::new(0.0, g.xd_sys(case.base_mva)) * i
        })
        .collect()
}

/// Builds the swing-model coefficients from a power flow and its reduced
/// network.
pub fn init_classic_model(
    case: &PowerSystemCase,
    pf: &PfSolution,
    net: &AugmentedNetwork,
) -> ReducedClassicModel {
    let e = internal_voltages(case, pf);
    ReducedClassicModel::from_internal(case, &e, net.y_r.clone())
}

impl ReducedClassicModel {
    /// Model with given internal voltages and reduced admittance.
    pub fn from_internal(case: &PowerSystemCase, e: &[Complex64], y_r: CMatrix) -> Self {
        let n = e.len();
        let base = case.base_mva;
        let e_mag: Vec<f64> = e.iter().map(|z| z.norm()).collect();
        let delta_s: Vec<f64> = e.iter().map(|z| z.arg()).collect();
        let c_coef = DMatrix::from_fn(n, n, |i, j| {
            if i == j { 0.0 } else { e_mag[i] * e_mag[j] * y_r[(i, j)].im }
        });
        let d_coef = DMatrix::from_fn(n, n, |i, j| {
            if i == j { 0.0 } else { e_mag[i] * e_mag[j] * y_r[(i, j)].re }
        });
        let g_self = (0..n).map(|i| y_r[(i, i)].re).collect();
        let mut model = Self {
            n,
            omega_s: case.omega_s(),
            h: case.generators.iter().map(|g| g.h_sys(base)).collect(),
            d: case.generators.iter().map(|g| g.d_sys(base)).collect(),
            pm: vec![0.0; n],
            e_mag,
            delta_s,
            g_self,
            c_coef,
            d_coef,
            y_r,
        };
        model.pm = model.electrical_power(&vec![0.0; n]);
        model
    }

    /// `delta_si - delta_sj`.
    pub fn delta_s_diff(&self, i: usize, j: usize) -> f64 {
        self.delta_s[i] - self.delta_s[j]
    }

    /// Electrical power of every machine at angle deviations `dev` (rad).
    pub fn electrical_power(&self, dev: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut p = self.e_mag[i] * self.e_mag[i] * self.g_self[i];
                for j in 0..self.n {
                    if j != i {
                        let th = self.delta_s_diff(i, j) + dev[i] - dev[j];
                        let (s, c) = th.sin_cos();
                        p += self.c_coef[(i, j)] * s + self.d_coef[(i, j)] * c;
                    }
                }
                p
            })
            .collect()
    }

    /// Internal voltage phasors at angle deviations `dev`, magnitudes fixed.
    pub fn internal_voltages(&self, dev: &[f64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| Complex64::from_polar(self.e_mag[i], self.delta_s[i] + dev[i]))
            .collect()
    }

    /// Uniform damping ratio D/(2H) (1/s).
    pub fn damping_ratio(&self) -> f64 {
        self.d[0] / (2.0 * self.h[0])
    }
}
