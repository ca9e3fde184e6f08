//! Integration and differential operators for conformal metrics on the sphere.
//!
//! All derivatives are spectral. Tensors are expressed in the orthonormal
//! frame `(e_theta, e_phi / sin theta)` of the round metric, which is regular
//! at every Gauss-Legendre node.

use super::field::{S2ConformalMetric, S2Field};
use super::grid::SphereGrid;
use super::sht::SpectralCoeffs;
use crate::{Error, Result};

/// Relative solvability tolerance for [`solve_poisson`].
pub const POISSON_SOLVABILITY_TOL: f64 = 1e-8;
/// Relative residual bound promised by [`solve_poisson`].
pub const POISSON_RESIDUAL_TOL: f64 = 1e-6;

/// `int field dA` with respect to `metric`.
pub fn quadrature(field: &S2Field, metric: &S2ConformalMetric) -> Result<f64> {
    field.check_resolution(&metric.logfactor)?;
    Ok(field
        .zip_map(&metric.area_density(), |f, d| f * d)
        .round_integral())
}

/// Mean value of `field` with respect to the area form of `metric`.
pub fn average(field: &S2Field, metric: &S2ConformalMetric) -> Result<f64> {
    Ok(quadrature(field, metric)? / metric.area())
}

/// Laplacian of the round unit metric.
pub fn round_laplacian(field: &S2Field) -> S2Field {
    let c = field.coeffs().scale_by_degree(|l| -((l * (l + 1)) as f64));
    S2Field::from_coeffs(field.grid(), &c)
}

/// Laplace-Beltrami operator of `metric`: `exp(-2u) sigma^-2 Lap_*`.
pub fn laplace_beltrami(field: &S2Field, metric: &S2ConformalMetric) -> Result<S2Field> {
    field.check_resolution(&metric.logfactor)?;
    let s2 = metric.sigma * metric.sigma;
    Ok(round_laplacian(field).zip_map(&metric.logfactor, |l, u| l * (-2.0 * u).exp() / s2))
}

/// Solves `Lap_metric psi = rhs`, normalised so that `int psi dA = 0`.
///
/// In two dimensions the conformal Laplacian factorises, so the problem is
/// `Lap_* psi = exp(2u) sigma^2 rhs`, which is inverted by spectral
/// diagonalisation on the mean-zero subspace.
pub fn solve_poisson(rhs: &S2Field, metric: &S2ConformalMetric) -> Result<S2Field> {
    Ok(solve_poisson_spectral(rhs, metric)?.0)
}

/// [`solve_poisson`] returning the spectral coefficients of the solution as well.
pub fn solve_poisson_spectral(
    rhs: &S2Field,
    metric: &S2ConformalMetric,
) -> Result<(S2Field, SpectralCoeffs)> {
    rhs.check_resolution(&metric.logfactor)?;
    let area = metric.area();
    let imbalance = quadrature(rhs, metric)? / area;
    let tolerance = POISSON_SOLVABILITY_TOL * rhs.max_abs();
    if imbalance.abs() > tolerance && imbalance.abs() > f64::MIN_POSITIVE {
        return Err(Error::PoissonImbalance {
            imbalance,
            tolerance,
        });
    }
    let density = metric.area_density();
    let source = rhs.zip_map(&density, |r, d| r * d);
    let mut c = source.coeffs().scale_by_degree(|l| {
        if l == 0 {
            0.0
        } else {
            -1.0 / (l * (l + 1)) as f64
        }
    });
    let psi = S2Field::from_coeffs(rhs.grid(), &c);
    let mean = quadrature(&psi, metric)? / area;
    // The degree-0 basis function is the constant 1/sqrt(2).
    c.set(0, 0, -mean * std::f64::consts::SQRT_2, 0.0);
    Ok((psi.map(|v| v - mean), c))
}

/// `max |Lap psi - rhs|` after removing the mean of `rhs`.
pub fn poisson_residual(psi: &S2Field, rhs: &S2Field, metric: &S2ConformalMetric) -> Result<f64> {
    let lap = laplace_beltrami(psi, metric)?;
    let mean = average(rhs, metric)?;
    Ok(lap.zip_map(rhs, |l, r| l - (r - mean)).max_abs())
}

/// Gradient and covariant Hessian of a field, sampled on the grid.
#[derive(Debug, Clone)]
pub struct GradHess {
    /// `df(e_theta)` and `df(e_phi_hat)` (covariant, round frame).
    pub d_theta: Vec<f64>,
    pub d_phi_hat: Vec<f64>,
    /// Covariant Hessian of `metric` in the round frame.
    pub h_tt: Vec<f64>,
    pub h_tp: Vec<f64>,
    pub h_pp: Vec<f64>,
    /// `exp(-2u) sigma^-2` at each node, i.e. the inverse metric in the frame.
    pub inv_scale: Vec<f64>,
}

impl GradHess {
    /// Components of the gradient vector `metric^{-1} df` in the round frame.
    pub fn gradient_vector(&self, k: usize) -> [f64; 2] {
        [
            self.inv_scale[k] * self.d_theta[k],
            self.inv_scale[k] * self.d_phi_hat[k],
        ]
    }

    /// `|df|` measured in the metric.
    pub fn gradient_norm(&self, k: usize) -> f64 {
        (self.inv_scale[k] * (self.d_theta[k].powi(2) + self.d_phi_hat[k].powi(2))).sqrt()
    }

    /// Metric trace of the Hessian, equal to the Laplace-Beltrami operator.
    pub fn trace(&self, k: usize) -> f64 {
        self.inv_scale[k] * (self.h_tt[k] + self.h_pp[k])
    }

    /// Norm of the Hessian measured in the metric.
    pub fn hessian_norm(&self, k: usize) -> f64 {
        let s = self.inv_scale[k];
        s * (self.h_tt[k].powi(2) + 2.0 * self.h_tp[k].powi(2) + self.h_pp[k].powi(2)).sqrt()
    }

    pub fn len(&self) -> usize {
        self.d_theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_theta.is_empty()
    }
}

/// First derivatives `(f_theta, f_phi / sin theta)` in the round frame.
pub fn round_gradient(field: &S2Field) -> (Vec<f64>, Vec<f64>) {
    round_gradient_of(field.grid(), &field.coeffs())
}

/// [`round_gradient`] of the field with coefficients `c`.
pub fn round_gradient_of(grid: &SphereGrid, c: &SpectralCoeffs) -> (Vec<f64>, Vec<f64>) {
    let ft = grid.synthesize_d_theta(c);
    let mut fp = grid.synthesize(&c.d_phi());
    let nphi = grid.n_phi();
    for (i, s) in grid.sin_theta().iter().enumerate() {
        for v in &mut fp[i * nphi..(i + 1) * nphi] {
            *v /= s;
        }
    }
    (ft, fp)
}

/// Gradient and covariant Hessian of `field` with respect to `metric`.
pub fn gradient_and_hessian(field: &S2Field, metric: &S2ConformalMetric) -> Result<GradHess> {
    field.check_resolution(&metric.logfactor)?;
    let grid = field.grid();
    let nphi = grid.n_phi();
    let c = field.coeffs();
    let cp = c.d_phi();
    let f_t = grid.synthesize_d_theta(&c);
    let f_p = grid.synthesize(&cp);
    let f_pp = grid.synthesize(&cp.d_phi());
    let f_tp = grid.synthesize_d_theta(&cp);
    let lap = grid.synthesize(&c.scale_by_degree(|l| -((l * (l + 1)) as f64)));
    let (w_t, w_p) = round_gradient(&metric.logfactor);
    let s2 = metric.sigma * metric.sigma;

    let n = grid.len();
    let mut out = GradHess {
        d_theta: vec![0.0; n],
        d_phi_hat: vec![0.0; n],
        h_tt: vec![0.0; n],
        h_tp: vec![0.0; n],
        h_pp: vec![0.0; n],
        inv_scale: vec![0.0; n],
    };
    for i in 0..grid.n_theta() {
        let s = grid.sin_theta()[i];
        let cot = grid.cos_theta()[i] / s;
        for j in 0..nphi {
            let k = i * nphi + j;
            let ft = f_t[k];
            let fp_hat = f_p[k] / s;
            let fpp = f_pp[k] / (s * s);
            let ftt = lap[k] - cot * ft - fpp;
            // Round Hessian in the orthonormal frame.
            let r_tt = ftt;
            let r_tp = (f_tp[k] - cot * f_p[k]) / s;
            let r_pp = fpp + cot * ft;
            // Conformal correction: -(dw df + df dw) + <dw, df> g_*.
            let (wt, wp) = (w_t[k], w_p[k]);
            let dot = wt * ft + wp * fp_hat;
            out.d_theta[k] = ft;
            out.d_phi_hat[k] = fp_hat;
            out.h_tt[k] = r_tt - 2.0 * wt * ft + dot;
            out.h_tp[k] = r_tp - (wt * fp_hat + wp * ft);
            out.h_pp[k] = r_pp - 2.0 * wp * fp_hat + dot;
            out.inv_scale[k] = (-2.0 * metric.logfactor.values()[k]).exp() / s2;
        }
    }
    Ok(out)
}
