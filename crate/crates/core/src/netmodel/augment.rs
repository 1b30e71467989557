use num_complex::Complex64;

use super::admittance::build_admittance;
use super::case::PowerSystemCase;
use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::powerflow::PfSolution;

/// Network augmented with constant-impedance loads and generator source
/// reactances, partitioned over generator terminals / other buses, and
/// reduced to the generator internal buses.
#[derive(Debug, Clone)]
pub struct AugmentedNetwork {
    /// Branch and shunt admittances only.
    pub y_bus: CMatrix,
    /// Constant-impedance load admittance per bus (pu).
    pub load_admittance: Vec<Complex64>,
    /// `y_bus` plus load admittances.
    pub y_net: CMatrix,
    /// Bus position of each generator terminal, generator order.
    pub terminal: Vec<usize>,
    /// Bus positions without a generator, ascending.
    pub non_gen: Vec<usize>,
    /// 1/(j x'd) per generator.
    pub source_admittance: Vec<Complex64>,
    pub y11: CMatrix,
    pub y12: CMatrix,
    pub y21: CMatrix,
    pub y22: CMatrix,
    /// `-Y22^{-1} Y21`: maps terminal voltages onto non-generator voltages.
    pub non_gen_map: CMatrix,
    /// `Y11 - Y12 Y22^{-1} Y21`: terminal currents from terminal voltages.
    pub y_terminal: CMatrix,
    /// Reduced admittance over internal buses.
    pub y_r: CMatrix,
}

/// Load admittances `conj(S_L) / |V|^2` at the solved bus voltages.
pub fn load_admittance_from_pf(case: &PowerSystemCase, pf: &PfSolution) -> Vec<Complex64> {
    case.buses
        .iter()
        .zip(&pf.voltage)
        .map(|(b, v)| {
            if b.p_load_mw == 0.0 && b.q_load_mvar == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let s = Complex64::new(b.p_load_mw, b.q_load_mvar) / case.base_mva;
                s.conj() / v.norm_sqr()
            }
        })
        .collect()
}

/// Converts loads at the power-flow voltages, attaches the internal buses
/// and eliminates every network bus.
pub fn augment_and_reduce(case: &PowerSystemCase, pf: &PfSolution) -> Result<AugmentedNetwork> {
    let source = case
        .generators
        .iter()
        .map(|g| Complex64::new(0.0, g.xd_sys(case.base_mva)).inv())
        .collect();
    AugmentedNetwork::assemble(
        build_admittance(case),
        load_admittance_from_pf(case, pf),
        case.generator_buses(),
        source,
    )
}

impl AugmentedNetwork {
    pub fn assemble(
        y_bus: CMatrix,
        load_admittance: Vec<Complex64>,
        terminal: Vec<usize>,
        source_admittance: Vec<Complex64>,
    ) -> Result<Self> {
        let n = y_bus.nrows();
        let mut y_net = y_bus.clone();
        for (k, yl) in load_admittance.iter().enumerate() {
            y_net[(k, k)] += yl;
        }
        let non_gen: Vec<usize> = (0..n).filter(|k| !terminal.contains(k)).collect();
        let y11 = linalg::select(&y_net, &terminal, &terminal);
        let y12 = linalg::select(&y_net, &terminal, &non_gen);
        let y21 = linalg::select(&y_net, &non_gen, &terminal);
        let y22 = linalg::select(&y_net, &non_gen, &non_gen);
        let non_gen_map = -linalg::solve(&y22, &y21, "Y22 (non-generator buses)")?;
        let y_terminal = &y11 + &y12 * &non_gen_map;

        // Eliminate all network buses with the source branches attached.
        let ng = terminal.len();
        let mut m = y_net.clone();
        let mut rhs = CMatrix::zeros(n, ng);
        for (k, (&t, ys)) in terminal.iter().zip(&source_admittance).enumerate() {
            m[(t, t)] += ys;
            rhs[(t, k)] = *ys;
        }
        let x = linalg::solve(&m, &rhs, "augmented network")?;
        let y_r = CMatrix::from_fn(ng, ng, |i, j| {
            let diag = if i == j { source_admittance[i] } else { Complex64::new(0.0, 0.0) };
            diag - source_admittance[i] * x[(terminal[i], j)]
        });

        Ok(Self {
            y_bus,
            load_admittance,
            y_net,
            terminal,
            non_gen,
            source_admittance,
            y11,
            y12,
            y21,
            y22,
            non_gen_map,
            y_terminal,
            y_r,
        })
    }

    /// Same network with different constant-impedance loads.
    pub fn with_load_admittance(&self, load_admittance: Vec<Complex64>) -> Result<Self> {
        Self::assemble(
            self.y_bus.clone(),
            load_admittance,
            self.terminal.clone(),
            self.source_admittance.clone(),
        )
    }

    pub fn n_generators(&self) -> usize {
        self.terminal.len()
    }

    pub fn n_buses(&self) -> usize {
        self.y_bus.nrows()
    }

    /// Terminal currents `Y_r E` injected by the internal sources.
    pub fn internal_currents(&self, e: &[Complex64]) -> Vec<Complex64> {
        linalg::mat_vec(&self.y_r, e)
    }

    /// All bus voltages given internal voltages, by solving the augmented
    /// network directly (no use of `y_r`).
    pub fn solve_from_internal(&self, e: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n_buses();
        let mut m = self.y_net.clone();
        let mut rhs = CMatrix::zeros(n, 1);
        for ((&t, ys), ek) in self.terminal.iter().zip(&self.source_admittance).zip(e) {
            m[(t, t)] += ys;
            rhs[(t, 0)] += ys * ek;
        }
        let v = linalg::solve(&m, &rhs, "augmented network")?;
        Ok(v.iter().copied().collect())
    }

    /// Assembles full bus voltages from terminal and non-generator parts.
    pub fn scatter(&self, v_t: &[Complex64], v_non_gen: &[Complex64]) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.n_buses()];
        for (&k, x) in self.terminal.iter().zip(v_t) {
            v[k] = *x;
        }
        for (&k, x) in self.non_gen.iter().zip(v_non_gen) {
            v[k] = *x;
        }
        v
    }

    /// Max residual of `[Y11 Y12; Y21 Y22][V_t; V_nonG] = [I_t; 0]`.
    pub fn kcl_residual(
        &self,
        v_t: &[Complex64],
        v_non_gen: &[Complex64],
        i_t: &[Complex64],
    ) -> f64 {
        let top: Vec<Complex64> = linalg::mat_vec(&self.y11, v_t)
            .into_iter()
            .zip(linalg::mat_vec(&self.y12, v_non_gen))
            .zip(i_t)
            .map(|((a, b), i)| a + b - i)
            .collect();
        let bottom: Vec<Complex64> = linalg::mat_vec(&self.y21, v_t)
            .into_iter()
            .zip(linalg::mat_vec(&self.y22, v_non_gen))
            .map(|(a, b)| a + b)
            .collect();
        linalg::max_abs(top.into_iter().chain(bottom))
    }
}
