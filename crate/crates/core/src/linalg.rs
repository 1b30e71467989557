//! Small dense complex linear-algebra helpers shared by the network code.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Solves `a * x = b`, failing on a singular or numerically broken system.
pub fn solve(a: &CMatrix, b: &CMatrix, what: &str) -> Result<CMatrix> {
    if a.nrows() == 0 {
        return Ok(CMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::SingularNetwork(what.to_string()))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularNetwork(what.to_string()));
    }
    Ok(x)
}

pub fn select(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn max_abs(v: impl IntoIterator<Item = Complex64>) -> f64 {
    v.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
