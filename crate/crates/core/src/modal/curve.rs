use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::decomposition::ModalDecomposition;
use crate::dynamics::eval_f_slice;
use crate::error::{Error, Result};
use crate::powerflow::ReducedClassicModel;

/// Generalized acceleration and angle rate of one mode at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedRates {
    /// `dω_g/dt = a c − b d`
    pub speed_rate: f64,
    /// `dδ_g/dt = c`
    pub angle_rate: f64,
}

/// Maps generalized coordinates `(ω_g, δ_g)` of `mode` (all other modal
/// coordinates zero) to the real deviation state `x = P y`.
pub fn modal_to_state(
    dec: &ModalDecomposition,
    mode: usize,
    omega_g: f64,
    delta_g: f64,
    realness_tol: f64,
) -> Result<Vec<f64>> {
    let l1 = dec.eigenvalues[2 * mode];
    let l2 = dec.eigenvalues[2 * mode + 1];
    let k = Complex64::new(2.0, 0.0) / (l1 - l2);
    let y1 = k * (omega_g - l2 * delta_g);
    let y2 = k * (-omega_g + l1 * delta_g);
    let m = dec.p.nrows();
    let mut x = Vec::with_capacity(m);
    let mut residue: f64 = 0.0;
    for r in 0..m {
        let z = dec.p[(r, 2 * mode)] * y1 + dec.p[(r, 2 * mode + 1)] * y2;
        residue = residue.max(z.im.abs());
        x.push(z.re);
    }
    if residue > realness_tol {
        return Err(Error::NonReal { residue });
    }
    Ok(x)
}

fn rates(
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    mode: usize,
    omega_g: f64,
    delta_g: f64,
    realness_tol: f64,
) -> Result<GeneralizedRates> {
    let x = modal_to_state(dec, mode, omega_g, delta_g, realness_tol)?;
    let f = eval_f_slice(model, &x);
    let row = 2 * mode;
    let g: Complex64 = (0..f.len()).map(|c| dec.p_inv[(row, c)] * f[c]).sum();
    let l = dec.eigenvalues[row];
    Ok(GeneralizedRates {
        speed_rate: l.re * g.re - l.im * g.im,
        angle_rate: g.re,
    })
}

/// Generalized power `P_i = h_1i(δ_g)` of `mode`, evaluated on the
/// `ω_g = 0` slice through the full nonlinear vector field.
pub fn eval_generalized_power(
    dec: &ModalDecomposition,
    model: &ReducedClassicModel,
    mode: usize,
    delta_g: f64,
    realness_tol: f64,
) -> Result<f64> {
    Ok(rates(dec, model, mode, 0.0, delta_g, realness_tol)?.speed_rate)
}

/// Generalized power-angle curve of one oscillatory mode.
#[derive(Debug, Clone, Copy)]
pub struct GeneralizedCurve<'a> {
    pub dec: &'a ModalDecomposition,
    pub model: &'a ReducedClassicModel,
    pub mode: usize,
    pub realness_tol: f64,
}

impl<'a> GeneralizedCurve<'a> {
    pub fn new(
        dec: &'a ModalDecomposition,
        model: &'a ReducedClassicModel,
        mode: usize,
        realness_tol: f64,
    ) -> Self {
        Self { dec, model, mode, realness_tol }
    }

    pub fn eval(&self, delta_g: f64) -> Result<f64> {
        eval_generalized_power(self.dec, self.model, self.mode, delta_g, self.realness_tol)
    }

    pub fn rates(&self, omega_g: f64, delta_g: f64) -> Result<GeneralizedRates> {
        rates(self.dec, self.model, self.mode, omega_g, delta_g, self.realness_tol)
    }

    /// `n` evenly spaced samples `(δ_g, h)` over `[lo, hi]`.
    pub fn sample(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        (0..n)
            .map(|k| {
                let d = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
                Ok((d, self.eval(d)?))
            })
            .collect()
    }
}

/// Diagnostic residuals of the single-degree-of-freedom form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SdofResiduals {
    pub mode: usize,
    /// `max |dω_g/dt(ω_g, δ_g) − dω_g/dt(0, δ_g)|`
    pub speed_dependence: f64,
    /// `max |dδ_g/dt − ω_g|`
    pub angle_rate: f64,
    pub points: usize,
}

/// Measures how far the modal equations deviate from
/// `dω_g/dt = h(δ_g), dδ_g/dt = ω_g` over a grid of `(ω_g, δ_g)`.
pub fn check_sdof_assumption(
    curve: &GeneralizedCurve<'_>,
    grid: &[(f64, f64)],
) -> Result<SdofResiduals> {
    let mut out = SdofResiduals { mode: curve.mode, ..Default::default() };
    for &(w, d) in grid {
        let at = curve.rates(w, d)?;
        let on_slice = curve.rates(0.0, d)?;
        out.speed_dependence = out.speed_dependence.max((at.speed_rate - on_slice.speed_rate).abs());
        out.angle_rate = out.angle_rate.max((at.angle_rate - w).abs());
        out.points += 1;
    }
    Ok(out)
}
