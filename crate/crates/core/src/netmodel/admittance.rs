use num_complex::Complex64;

use super::case::PowerSystemCase;
use crate::linalg::CMatrix;

/// Bus admittance matrix in bus order, pi-model branches with the tap on the
/// `from` side, bus shunts on the diagonal. Loads are not included.
pub fn build_admittance(case: &PowerSystemCase) -> CMatrix {
    let n = case.n_buses();
    let idx = case.bus_index();
    let mut y = CMatrix::zeros(n, n);
    for br in &case.branches {
        let (f, t) = (idx[&br.from], idx[&br.to]);
        let ys = Complex64::new(br.r, br.x).inv();
        let half_b = Complex64::new(0.0, br.b / 2.0);
        let tap = br.tap;
        y[(f, f)] += (ys + half_b) / (tap * tap);
        y[(t, t)] += ys + half_b;
        y[(f, t)] -= ys / tap;
        y[(t, f)] -= ys / tap;
    }
    for (k, b) in case.buses.iter().enumerate() {
        y[(k, k)] += Complex64::new(b.g_shunt, b.b_shunt);
    }
    y
}
