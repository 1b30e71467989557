use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{angle_index, speed_index};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::options::EigenOptions;

/// Eigen-decomposition of the equilibrium Jacobian arranged as
/// `(λ_1, λ̄_1, …, λ_{N-1}, λ̄_{N-1}, r_1, r_2)`.
///
/// Oscillatory modes are sorted by ascending frequency. The last two columns
/// of `p` span the invariant subspace of uniform angle and speed offsets (the
/// centre-of-inertia modes). When their two eigenvalues coincide (zero
/// damping) the pair is defective; the columns are then a basis of that
/// subspace and `real_block` holds the non-diagonal 2×2 restriction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalDecomposition {
    pub n_machines: usize,
    pub eigenvalues: Vec<Complex64>,
    pub p: CMatrix,
    pub p_inv: CMatrix,
    pub real_block: [[f64; 2]; 2],
    pub real_block_defective: bool,
}

impl ModalDecomposition {
    pub fn n_modes(&self) -> usize {
        self.n_machines.saturating_sub(1)
    }

    /// `λ_{2i-1} = a_i + j b_i` with `b_i > 0`.
    pub fn mode_eigenvalue(&self, mode: usize) -> Complex64 {
        self.eigenvalues[2 * mode]
    }

    pub fn frequency_hz(&self, mode: usize) -> f64 {
        self.mode_eigenvalue(mode).im / (2.0 * std::f64::consts::PI)
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        (0..self.n_modes()).map(|i| self.frequency_hz(i)).collect()
    }

    /// Angle components of the normalized right eigenvector of `mode`.
    pub fn mode_shape(&self, mode: usize) -> Vec<Complex64> {
        (0..self.n_machines)
            .map(|k| self.p[(angle_index(k), 2 * mode)])
            .collect()
    }

    /// `Λ` with the real-mode block in the lower right corner, so that
    /// `A P = P Λ` holds in both the diagonalizable and defective cases.
    pub fn lambda_matrix(&self) -> CMatrix {
        let m = self.eigenvalues.len();
        let mut l = CMatrix::zeros(m, m);
        for k in 0..m - 2 {
            l[(k, k)] = self.eigenvalues[k];
        }
        if self.real_block_defective {
            for r in 0..2 {
                for c in 0..2 {
                    l[(m - 2 + r, m - 2 + c)] = Complex64::new(self.real_block[r][c], 0.0);
                }
            }
        } else {
            l[(m - 2, m - 2)] = self.eigenvalues[m - 2];
            l[(m - 1, m - 1)] = self.eigenvalues[m - 1];
        }
        l
    }

    /// Rescales the conjugate columns of `mode` by `e^{±jφ}` (and the
    /// matching rows of `p_inv` inversely). The decomposition stays valid.
    pub fn with_mode_phase(&self, mode: usize, phase: f64) -> Self {
        let mut out = self.clone();
        let s = Complex64::from_polar(1.0, phase);
        let (c1, c2) = (2 * mode, 2 * mode + 1);
        for r in 0..self.p.nrows() {
            out.p[(r, c1)] *= s;
            out.p[(r, c2)] *= s.conj();
        }
        for c in 0..self.p_inv.ncols() {
            out.p_inv[(c1, c)] /= s;
            out.p_inv[(c2, c)] /= s.conj();
        }
        out
    }

    /// `‖A P − P Λ‖∞`.
    pub fn eigen_residual(&self, a: &DMatrix<f64>) -> f64 {
        let ac = a.map(|v| Complex64::new(v, 0.0));
        let r = &ac * &self.p - &self.p * self.lambda_matrix();
        row_sum_norm(&r)
    }

    /// `‖P P^{-1} − I‖∞`.
    pub fn inverse_residual(&self) -> f64 {
        let m = self.p.nrows();
        row_sum_norm(&(&self.p * &self.p_inv - CMatrix::identity(m, m)))
    }
}

pub(crate) fn row_sum_norm(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the uniform-offset subspace `span(e_δ, e_ω)` and of
/// its orthogonal complement (Helmert contrasts in angle and speed slots).
fn coi_bases(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = 2 * n;
    let s = 1.0 / (n as f64).sqrt();
    let mut q = DMatrix::zeros(m, 2);
    for k in 0..n {
        q[(angle_index(k), 0)] = s;
        q[(speed_index(k), 1)] = s;
    }
    let mut qc = DMatrix::zeros(m, m - 2);
    for j in 1..n {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for k in 0..j {
            qc[(angle_index(k), j - 1)] = 1.0 / norm;
            qc[(speed_index(k), n - 1 + j - 1)] = 1.0 / norm;
        }
        qc[(angle_index(j), j - 1)] = -(j as f64) / norm;
        qc[(speed_index(j), n - 1 + j - 1)] = -(j as f64) / norm;
    }
    (q, qc)
}

/// Eigenvalues of the Jacobian with the two centre-of-inertia modes
/// removed. Used for the stability checks: the rotational-invariance zero
/// eigenvalue never signals instability.
pub fn relative_spectrum(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows() / 2;
    check_square_even(a)?;
    if n < 2 {
        return Ok(Vec::new());
    }
    let (_, qc) = coi_bases(n);
    let reduced = qc.transpose() * a * &qc;
    Ok(reduced.complex_eigenvalues().iter().copied().collect())
}

fn check_square_even(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() || !a.nrows().is_multiple_of(2) || a.nrows() == 0 {
        return Err(Error::Dimension {
            expected: a.nrows().max(2) + a.nrows() % 2,
            got: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("Jacobian has non-finite entries".into()));
    }
    Ok(())
}

/// Inverse iteration for the eigenvector of `a` belonging to `lambda`.
fn eigenvector(a: &CMatrix, lambda: Complex64) -> Result<DVector<Complex64>> {
    let m = a.nrows();
    let scale = 1.0 + lambda.norm();
    let mut shift = lambda;
    let mut v = DVector::from_fn(m, |k, _| Complex64::new(1.0, 0.1 * (k as f64 + 1.0)));
    v /= Complex64::new(v.norm(), 0.0);
    for attempt in 0..4 {
        let shifted = a - CMatrix::identity(m, m) * shift;
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&v) {
                Some(w) if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    let nrm = w.norm();
                    if nrm == 0.0 {
                        ok = false;
                        break;
                    }
                    v = w / Complex64::new(nrm, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(v);
        }
        shift = lambda + Complex64::new(1e-12, 1e-12) * scale * 10f64.powi(attempt);
    }
    Err(Error::Eigen(format!("inverse iteration failed for eigenvalue {lambda}")))
}

/// Rotates `v` so its angle components are as real as possible in the
/// least-squares sense, then scales (by a real factor) so the largest angle
/// component is exactly 1/2 in its real part.
fn normalize_phase(v: &mut DVector<Complex64>, n: usize) {
    let (mut rr, mut ii, mut ri) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let z = v[angle_index(k)];
        rr += z.re * z.re;
        ii += z.im * z.im;
        ri += z.re * z.im;
    }
    // ‖Im(e^{jθ} v)‖² = (rr+ii)/2 + (ii-rr)/2 cos 2θ + ri sin 2θ
    let phi = ri.atan2((ii - rr) / 2.0);
    let theta = (phi + std::f64::consts::PI) / 2.0;
    let rot = Complex64::from_polar(1.0, theta);
    v.iter_mut().for_each(|z| *z *= rot);
    let k_max = (0..n)
        .max_by(|&a, &b| v[angle_index(a)].norm().total_cmp(&v[angle_index(b)].norm()))
        .unwrap_or(0);
    let s = 0.5 / v[angle_index(k_max)].re;
    v.iter_mut().for_each(|z| *z *= s);
}

/// Paired, phase-normalized eigen-decomposition of the equilibrium Jacobian
/// of a uniform-damping classic model.
pub fn decompose(a: &DMatrix<f64>, opts: &EigenOptions) -> Result<ModalDecomposition> {
    check_square_even(a)?;
    let m = a.nrows();
    let n = m / 2;
    let (q, qc) = coi_bases(n);
    let a_norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);

    let r = q.transpose() * a * &q;
    let leak = (a * &q - &q * &r).amax();
    if leak > 1e-9 * a_norm.max(1.0) {
        return Err(Error::Eigen(format!(
            "uniform-offset subspace is not invariant (residual {leak:.3e}); damping is not uniform"
        )));
    }

    // Oscillatory part from the complement, then lifted back to full space.
    let reduced = qc.transpose() * a * &qc;
    let spectrum = reduced.complex_eigenvalues();
    let mut upper: Vec<Complex64> = spectrum.iter().copied().filter(|z| z.im > opts.real_tol).collect();
    let lower = spectrum.iter().filter(|z| z.im < -opts.real_tol).count();
    if upper.len() != n - 1 || lower != n - 1 {
        return Err(Error::Pairing { expected: n - 1, found: upper.len().min(lower) });
    }
    upper.sort_by(|x, y| x.im.total_cmp(&y.im));
    for (i, l) in upper.iter().enumerate() {
        if l.re > opts.instability_threshold {
            return Err(Error::UnstableMode { mode: i, real_part: l.re });
        }
    }

    let reduced_c = reduced.map(|v| Complex64::new(v, 0.0));
    let qc_c = qc.map(|v| Complex64::new(v, 0.0));
    let q_c = q.map(|v| Complex64::new(v, 0.0));
    let coupling = (q.transpose() * a * &qc).map(|v| Complex64::new(v, 0.0));
    let r_c = r.map(|v| Complex64::new(v, 0.0));

    let mut p = CMatrix::zeros(m, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (i, &lambda) in upper.iter().enumerate() {
        let u = eigenvector(&reduced_c, lambda)?;
        // z = (λI − R)^{-1} Qᵀ A Q⊥ u
        let rhs = &coupling * &u;
        let lhs = CMatrix::identity(2, 2) * lambda - &r_c;
        let z = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Eigen(format!("mode {i} coincides with a uniform-offset mode")))?;
        let mut v = &qc_c * &u + &q_c * &z;
        normalize_phase(&mut v, n);
        p.set_column(2 * i, &v);
        p.set_column(2 * i + 1, &v.map(|c| c.conj()));
        eigenvalues.push(lambda);
        eigenvalues.push(lambda.conj());
    }

    // Uniform-offset pair.
    let tr = r[(0, 0)] + r[(1, 1)];
    let det = r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)];
    let disc = tr * tr / 4.0 - det;
    let root = disc.max(0.0).sqrt();
    let (r1, r2) = (tr / 2.0 + root, tr / 2.0 - root);
    let gap_tol = 1e-9 * a_norm.max(1.0);
    let defective = disc < 0.0 || (r1 - r2) < gap_tol;
    let real_cols: [DVector<f64>; 2] = if defective {
        [q.column(0).into_owned(), q.column(1).into_owned()]
    } else {
        let vec_for = |l: f64| {
            let c1 = nalgebra::Vector2::new(r[(0, 1)], l - r[(0, 0)]);
            let c2 = nalgebra::Vector2::new(l - r[(1, 1)], r[(1, 0)]);
            let w = if c1.norm() >= c2.norm() { c1 } else { c2 };
            let full = &q * w;
            let nrm = full.norm();
            full / nrm
        };
        [vec_for(r1), vec_for(r2)]
    };
    for (k, col) in real_cols.iter().enumerate() {
        p.set_column(m - 2 + k, &col.map(|v| Complex64::new(v, 0.0)));
    }
    eigenvalues.push(Complex64::new(r1, 0.0));
    eigenvalues.push(Complex64::new(r2, 0.0));

    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("eigenvector matrix is singular".into()))?;
    if p_inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("eigenvector matrix is singular".into()));
    }
    Ok(ModalDecomposition {
        n_machines: n,
        eigenvalues,
        p,
        p_inv,
        real_block: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
        real_block_defective: defective,
    })
}
