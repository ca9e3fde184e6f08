//! ADM, Hawking and quasilocal isoperimetric mass.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fit::fit_line;
use crate::quad::GaussLegendre;
use crate::radial::RadialAFMetric;
use crate::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// A metric given in Cartesian coordinates on the end of an asymptotically
/// flat manifold.
pub trait AsymptoticChart: Sync {
    fn metric(&self, x: [f64; 3]) -> Mat3;

    /// `d_k g_ij`, indexed `[k][i][j]`. Defaults to fourth-order central
    /// differences.
    fn metric_derivative(&self, x: [f64; 3]) -> [Mat3; 3] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let h = 1e-3 * r.max(1.0);
        let mut out = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            let at = |s: f64| {
                let mut y = x;
                y[k] += s;
                self.metric(y)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            for i in 0..3 {
                for j in 0..3 {
                    out[k][i][j] =
                        (8.0 * (p1[i][j] - m1[i][j]) - (p2[i][j] - m2[i][j])) / (12.0 * h);
                }
            }
        }
        out
    }

    /// Coordinate radius below which the chart is not valid.
    fn inner_radius(&self) -> f64 {
        0.0
    }
}

/// `Phi(|x|)^4 delta` for a radial conformal factor given with its derivative.
pub struct ConformallyFlatChart<F: Fn(f64) -> (f64, f64) + Sync> {
    pub factor: F,
    pub inner: f64,
}

impl<F: Fn(f64) -> (f64, f64) + Sync> AsymptoticChart for ConformallyFlatChart<F> {
    fn metric(&self, x: [f64; 3]) -> Mat3 {
        let r = norm(x);
        let p4 = (self.factor)(r).0.powi(4);
        diag(p4)
    }

    fn metric_derivative(&self, x: [f64; 3]) -> [Mat3; 3] {
        let r = norm(x);
        let (p, pd) = (self.factor)(r);
        let radial = 4.0 * p.powi(3) * pd;
        let mut out = [[[0.0; 3]; 3]; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = diag(radial * x[k] / r);
        }
        out
    }

    fn inner_radius(&self) -> f64 {
        self.inner
    }
}

impl AsymptoticChart for RadialAFMetric {
    fn metric(&self, x: [f64; 3]) -> Mat3 {
        diag(self.phi(norm(x)).powi(4))
    }

    fn metric_derivative(&self, x: [f64; 3]) -> [Mat3; 3] {
        let r = norm(x);
        let (p, pd, _) = self.phi_derivs(r);
        let radial = 4.0 * p.powi(3) * pd;
        let mut out = [[[0.0; 3]; 3]; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = diag(radial * x[k] / r);
        }
        out
    }

    fn inner_radius(&self) -> f64 {
        RadialAFMetric::inner_radius(self)
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn diag(v: f64) -> Mat3 {
    [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]
}

/// Nodes and Euclidean weights for integrating over the unit sphere.
fn sphere_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let gl = GaussLegendre::new(n);
    let nphi = 2 * n;
    let mut out = Vec::with_capacity(n * nphi);
    for (&c, &w) in gl.nodes.iter().zip(&gl.weights) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..nphi {
            let p = 2.0 * PI * j as f64 / nphi as f64;
            out.push(([s * p.cos(), s * p.sin(), c], w * 2.0 * PI / nphi as f64));
        }
    }
    out
}

/// ADM flux `(1 / 16 pi) int sum (d_i g_ij - d_j g_ii) nu^j dS` over the
/// coordinate sphere of radius `r`, in Euclidean measure.
pub fn adm_flux<C: AsymptoticChart + ?Sized>(chart: &C, r: f64) -> f64 {
    let mut total = 0.0;
    for (nu, w) in sphere_rule(12) {
        let x = [r * nu[0], r * nu[1], r * nu[2]];
        let d = chart.metric_derivative(x);
        let mut s = 0.0;
        for j in 0..3 {
            let mut acc = 0.0;
            for i in 0..3 {
                acc += d[i][i][j] - d[j][i][i];
            }
            s += acc * nu[j];
        }
        total += s * w * r * r;
    }
    total / (16.0 * PI)
}

/// Per-radius mass estimates and their extrapolation to infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassReport {
    pub radii: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Intercept of a linear fit in `1/r` over the three largest radii.
    pub extrapolated: f64,
    pub fit_residual: f64,
    /// Change of the limit when the smallest radius is dropped.
    pub drop_smallest_change: f64,
    /// True when consecutive estimates change direction beyond the fit
    /// residual.
    pub non_monotone: bool,
}

impl MassReport {
    pub fn from_estimates(radii: Vec<f64>, estimates: Vec<f64>) -> Result<Self> {
        if radii.len() < 3 || radii.len() != estimates.len() {
            return Err(Error::InvalidInput(
                "mass extrapolation needs at least three radii".into(),
            ));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radii must be increasing".into()));
        }
        let tail = |k: usize| {
            let n = radii.len();
            let xs: Vec<f64> = radii[n - k..].iter().map(|r| 1.0 / r).collect();
            fit_line(&xs, &estimates[n - k..]).expect("distinct radii")
        };
        let fit = tail(3);
        let n = radii.len();
        // Same extrapolation rule applied to the estimates without the smallest radius.
        let drop_smallest_change = if n > 3 {
            let xs: Vec<f64> = radii[1..].iter().map(|r| 1.0 / r).collect();
            let c = fit_line(&xs, &estimates[1..]).unwrap().intercept;
            let b = fit_line(
                &radii.iter().map(|r| 1.0 / r).collect::<Vec<_>>(),
                &estimates,
            )
            .unwrap()
            .intercept;
            (b - c).abs()
        } else {
            0.0
        };
        let slack =
            10.0 * fit.rms_residual + 1e-14 * estimates.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diffs: Vec<f64> = estimates
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| d.abs() > slack)
            .collect();
        let non_monotone = diffs.windows(2).any(|w| w[0].signum() != w[1].signum());
        Ok(Self {
            radii,
            estimates,
            extrapolated: fit.intercept,
            fit_residual: fit.rms_residual,
            drop_smallest_change,
            non_monotone,
        })
    }
}

/// ADM mass from flux integrals at increasing coordinate radii.
pub fn adm_mass<C: AsymptoticChart + ?Sized>(chart: &C, radii: &[f64]) -> Result<MassReport> {
    if let Some(&r) = radii.first() {
        if r <= chart.inner_radius() {
            return Err(Error::OutOfRange {
                value: r,
                min: chart.inner_radius(),
                max: f64::INFINITY,
            });
        }
    }
    let estimates = radii.iter().map(|&r| adm_flux(chart, r)).collect();
    MassReport::from_estimates(radii.to_vec(), estimates)
}

/// Hawking mass of a constant-mean-curvature sphere.
pub fn hawking_mass(area: f64, h: f64) -> f64 {
    (area / (16.0 * PI)).sqrt() * (1.0 - area * h * h / (16.0 * PI))
}

/// Area of a coordinate sphere by surface quadrature of the induced metric.
pub fn coordinate_sphere_area<C: AsymptoticChart + ?Sized>(chart: &C, r: f64) -> f64 {
    let mut total = 0.0;
    for (nu, w) in sphere_rule(16) {
        let x = [r * nu[0], r * nu[1], r * nu[2]];
        let g = chart.metric(x);
        // Tangent frame orthonormal in the Euclidean metric.
        let a = if nu[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = normalize(cross(nu, a));
        let e2 = cross(nu, e1);
        let q = |u: [f64; 3], v: [f64; 3]| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += g[i][j] * u[i] * v[j];
                }
            }
            s
        };
        let det = q(e1, e1) * q(e2, e2) - q(e1, e2).powi(2);
        total += det.sqrt() * w * r * r;
    }
    total
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Hawking mass of a centred sphere in a radial metric, with the area by
/// surface quadrature and the mean curvature from a centred difference of
/// the area along the unit normal.
pub fn hawking_mass_quadrature(metric: &RadialAFMetric, rho: f64) -> f64 {
    let h = 1e-3 * rho;
    let a = coordinate_sphere_area(metric, rho);
    let ap = coordinate_sphere_area(metric, rho + h);
    let am = coordinate_sphere_area(metric, rho - h);
    let da_drho = (ap - am) / (2.0 * h);
    let mc = da_drho / (a * metric.phi(rho).powi(2));
    hawking_mass(a, mc)
}

/// Huisken's quasilocal isoperimetric mass of a region with volume `v` and
/// boundary area `a`.
pub fn quasilocal_iso_mass(v: f64, a: f64) -> f64 {
    2.0 / a * (v - a.powf(1.5) / (6.0 * PI.sqrt()))
}

/// `m_iso` of the region enclosed by the centred sphere of radius `rho`.
pub fn centered_iso_mass(metric: &RadialAFMetric, rho: f64) -> f64 {
    quasilocal_iso_mass(metric.volume(rho), metric.area(rho))
}
