//! Nonlinear swing-equation vector field and its analytic Jacobian.
//!
//! State ordering is interleaved per machine:
//! `x = (dδ_1, ω_1, dδ_2, ω_2, …, dδ_N, ω_N)`, angle deviations in rad and
//! speed deviations in pu. This ordering fixes the row/column meaning of the
//! Jacobian and of every eigenvector downstream.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::powerflow::ReducedClassicModel;

#[inline]
pub fn angle_index(machine: usize) -> usize {
    2 * machine
}

#[inline]
pub fn speed_index(machine: usize) -> usize {
    2 * machine + 1
}

/// Deviation state about the equilibrium; the equilibrium is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationState(Vec<f64>);

impl DeviationState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::Dimension { expected: x.len() + 1, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config {
                name: "state".into(),
                reason: "non-finite entry".into(),
            });
        }
        Ok(Self(x))
    }

    pub fn origin(n_machines: usize) -> Self {
        Self(vec![0.0; 2 * n_machines])
    }

    pub fn n_machines(&self) -> usize {
        self.0.len() / 2
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.0[angle_index(i)]
    }

    pub fn speed(&self, i: usize) -> f64 {
        self.0[speed_index(i)]
    }

    pub fn angles(&self) -> Vec<f64> {
        self.0.iter().step_by(2).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for DeviationState {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Right-hand side `f(x)` of the swing equations.
pub fn eval_f(model: &ReducedClassicModel, x: &DeviationState) -> Vec<f64> {
    eval_f_slice(model, x.as_slice())
}

pub(crate) fn eval_f_slice(model: &ReducedClassicModel, x: &[f64]) -> Vec<f64> {
    let n = model.n;
    debug_assert_eq!(x.len(), 2 * n);
    let dev: Vec<f64> = x.iter().step_by(2).copied().collect();
    let pe = model.electrical_power(&dev);
    let mut f = vec![0.0; 2 * n];
    for i in 0..n {
        let w = x[speed_index(i)];
        f[angle_index(i)] = model.omega_s * w;
        f[speed_index(i)] = (model.pm[i] - pe[i] - model.d[i] * w) / (2.0 * model.h[i]);
    }
    f
}

/// Closed-form Jacobian `∂f/∂x` at `x`.
pub fn eval_jacobian(model: &ReducedClassicModel, x: &DeviationState) -> DMatrix<f64> {
    let n = model.n;
    let dev = x.angles();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(angle_index(i), speed_index(i))] = model.omega_s;
        let m = 1.0 / (2.0 * model.h[i]);
        let mut diag = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let th = model.delta_s_diff(i, j) + dev[i] - dev[j];
            let (s, c) = th.sin_cos();
            // ∂P_ei/∂x_i contribution; ∂P_ei/∂x_j is its negative.
            let k = model.c_coef[(i, j)] * c - model.d_coef[(i, j)] * s;
            diag += k;
            a[(speed_index(i), angle_index(j))] = m * k;
        }
        a[(speed_index(i), angle_index(i))] = -m * diag;
        a[(speed_index(i), speed_index(i))] = -m * model.d[i];
    }
    a
}

/// Jacobian at the equilibrium.
pub fn jacobian_at_origin(model: &ReducedClassicModel) -> DMatrix<f64> {
    eval_jacobian(model, &DeviationState::origin(model.n))
}
