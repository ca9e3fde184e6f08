//! The collar `gamma = f(t) w(t) + dt^2` over an area-preserving path, the
//! Euclidean fill ball, and the glued metric for a spherically symmetric
//! outer region.
//!
//! The warp is `f(t) = (1 - t/sigma)^2` on `t in [0, sigma/2]`, so the inner
//! corner `t = 0` sits on the leaf and the outer corner `t = sigma/2` on the
//! boundary of the fill ball.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fit::{fit_exponent, ExponentFit};
use crate::mass::{hawking_mass, AsymptoticChart, Mat3};
use crate::ms_path::{build_path_with_stride, MetricPath};
use crate::quad::GaussLegendre;
use crate::radial::RadialAFMetric;
use crate::s2::{S2ConformalMetric, S2Field, SphereGrid};
use crate::{Error, Result};

/// `(f, f', f'')` for `f(t) = (1 - t/sigma)^2`.
pub fn warp(sigma: f64, t: f64) -> (f64, f64, f64) {
    let x = 1.0 - t / sigma;
    (x * x, -2.0 * x / sigma, 2.0 / (sigma * sigma))
}

#[derive(Debug, Clone)]
pub struct CollarMetric {
    pub path: MetricPath,
}

/// Largest `|R_gamma|` over the sampled times.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvatureSup {
    pub t: f64,
    pub value: f64,
}

impl CollarMetric {
    pub fn new(path: MetricPath) -> Self {
        Self { path }
    }

    pub fn sigma(&self) -> f64 {
        self.path.sigma
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.path.grid()
    }

    pub fn warp(&self, t: f64) -> (f64, f64, f64) {
        warp(self.sigma(), t)
    }

    /// Area of every `w(t)`, equal to that of `exp(2u) sigma^2 g_*`.
    pub fn leaf_area(&self) -> f64 {
        S2ConformalMetric::new(self.sigma(), self.path.u.clone())
            .expect("path logfactor is finite")
            .area()
    }

    /// `R_sigma` with `4 pi R_sigma^2` the leaf area.
    pub fn area_radius(&self) -> f64 {
        (self.leaf_area() / (4.0 * PI)).sqrt()
    }

    /// `R_gamma(., t) = 2 K_h - 2/(f sigma^2) - |w_dot|^2 / 4`, sampled at the
    /// grid points of the explicit path `w~(t)`. Pulling back by the flow
    /// only relabels the points, so pointwise bounds carry over.
    pub fn scalar_curvature(&self, t: f64) -> Result<S2Field> {
        let fields = self.path.fields_at(t)?;
        let (f, _, _) = self.warp(t);
        let s2 = self.sigma() * self.sigma();
        let k = fields.metric.gauss_curvature();
        let wd = fields.omega_dot(&self.path.u)?;
        let vals = k
            .values()
            .iter()
            .zip(&wd.norm_sq)
            .map(|(k, n)| 2.0 * k / f - 2.0 / (f * s2) - 0.25 * n)
            .collect();
        S2Field::new(self.grid().clone(), vals)
    }

    /// Sup of `|R_gamma|` over the path's time nodes.
    pub fn max_scalar_curvature(&self) -> Result<CurvatureSup> {
        let mut best = CurvatureSup { t: 0.0, value: 0.0 };
        for &t in &self.path.times {
            let v = self.scalar_curvature(t)?.max_abs();
            if v > best.value {
                best = CurvatureSup { t, value: v };
            }
        }
        Ok(best)
    }

    /// Mean curvatures `-f'/f` of the slices at `t = 0` and `t = sigma/2`,
    /// with respect to the normal `-d/dt`.
    pub fn corner_mean_curvatures(&self) -> (f64, f64) {
        let h = |t: f64| {
            let (f, fd, _) = self.warp(t);
            -fd / f
        };
        (h(0.0), h(self.sigma() / 2.0))
    }
}

pub fn collar_scalar_curvature(collar: &CollarMetric, t: f64) -> Result<S2Field> {
    collar.scalar_curvature(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollarVolumeArea {
    pub volume: f64,
    pub times: Vec<f64>,
    /// Slice areas `f(t) Area(w~(t))` at the path nodes.
    pub areas: Vec<f64>,
    /// `max |A(t) / (f(t) A(0)) - 1|`.
    pub area_ratio_spread: f64,
}

/// Volume of the collar and the areas of its slices.
pub fn collar_volume_and_area(collar: &CollarMetric) -> CollarVolumeArea {
    let sigma = collar.sigma();
    let u = &collar.path.u;
    let slice_area = |t: f64| {
        let s = 1.0 - 2.0 * t / sigma;
        let a = collar.path.drift_at(t);
        let (f, _, _) = collar.warp(t);
        f * u.map(|v| (2.0 * (v * s + a)).exp()).round_integral() * sigma * sigma
    };
    let volume = GaussLegendre::new(16).integrate_composite(0.0, sigma / 2.0, 8, slice_area);
    let times = collar.path.times.clone();
    let areas: Vec<f64> = collar
        .path
        .records
        .iter()
        .map(|r| collar.warp(r.t).0 * r.area)
        .collect();
    let a0 = areas[0];
    let area_ratio_spread = times
        .iter()
        .zip(&areas)
        .map(|(&t, &a)| (a / (collar.warp(t).0 * a0) - 1.0).abs())
        .fold(0.0, f64::max);
    CollarVolumeArea {
        volume,
        times,
        areas,
        area_ratio_spread,
    }
}

/// Mean curvatures on both sides of both corners.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanCurvatures {
    /// `H(Sigma, g)` of the leaf in the outer metric.
    pub leaf_g: f64,
    /// `H(Sigma, gamma)`.
    pub leaf_collar: f64,
    /// `H(Sigma', gamma)`.
    pub fill_collar: f64,
    /// `H(Sigma', g_E)` of the fill ball boundary.
    pub fill_euclidean: f64,
}

impl MeanCurvatures {
    pub fn inner_jump(&self) -> f64 {
        self.leaf_collar - self.leaf_g
    }

    /// `H(Sigma', g_E) - H(Sigma', gamma)`.
    pub fn outer_jump(&self) -> f64 {
        self.fill_euclidean - self.fill_collar
    }
}

/// Outer metric outside the leaf of mean curvature `2/sigma`, the collar
/// inside it, and a Euclidean ball filling the innermost slice.
#[derive(Debug, Clone)]
pub struct GluedMetric {
    pub outer: RadialAFMetric,
    pub collar: CollarMetric,
    /// Coordinate radius of the leaf in the outer chart.
    pub leaf_radius: f64,
    /// `R_sigma`, from the exact leaf area.
    pub area_radius: f64,
    /// Radius of the fill ball, `sqrt(f(sigma/2)) R_sigma = R_sigma / 2`.
    pub fill_radius: f64,
}

/// Resolution of the (trivial) path over a round leaf.
const ROUND_LEAF_N_THETA: usize = 8;
const ROUND_LEAF_STEPS: usize = 16;

impl GluedMetric {
    /// Glues at the centred sphere with `H = 2/sigma`. The leaf is round, so
    /// the boundary datum `u_sigma = ln(R_sigma / sigma)` is constant.
    pub fn new(outer: RadialAFMetric, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {sigma}"
            )));
        }
        let leaf_radius = outer.radius_with_mean_curvature(2.0 / sigma)?;
        let area_radius = outer.area_radius(leaf_radius);
        let grid = SphereGrid::new(ROUND_LEAF_N_THETA);
        let u = S2Field::constant(&grid, (area_radius / sigma).ln());
        let path = build_path_with_stride(&u, sigma, ROUND_LEAF_STEPS, ROUND_LEAF_STEPS)?;
        let collar = CollarMetric::new(path);
        let (f_end, _, _) = collar.warp(sigma / 2.0);
        let end_area = f_end * collar.path.records.last().unwrap().area;
        Ok(Self {
            outer,
            collar,
            leaf_radius,
            area_radius,
            fill_radius: (end_area / (4.0 * PI)).sqrt(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.collar.sigma()
    }

    pub fn boundary_mean_curvatures(&self) -> MeanCurvatures {
        let (leaf_collar, fill_collar) = self.collar.corner_mean_curvatures();
        MeanCurvatures {
            leaf_g: self.outer.mean_curvature(self.leaf_radius),
            leaf_collar,
            fill_collar,
            fill_euclidean: 2.0 / self.fill_radius,
        }
    }

    /// Relative mismatch of the induced metrics at the inner and outer
    /// corners, `max |h_1 / h_2 - 1|` over the grid.
    pub fn corner_mismatch(&self) -> (f64, f64) {
        let sigma = self.sigma();
        let path = &self.collar.path;
        let end = *path.drift.last().unwrap();
        let leaf = self.area_radius * self.area_radius;
        let inner = path
            .u
            .values()
            .iter()
            .map(|u| ((2.0 * u).exp() * sigma * sigma / leaf - 1.0).abs())
            .fold(0.0, f64::max);
        let (f_end, _, _) = self.collar.warp(sigma / 2.0);
        let fill = self.fill_radius * self.fill_radius;
        let outer = path
            .u
            .values()
            .iter()
            .map(|_| ((2.0 * end).exp() * sigma * sigma * f_end / fill - 1.0).abs())
            .fold(0.0, f64::max);
        (inner, outer)
    }

    /// Hawking mass of the leaf in the outer metric.
    pub fn leaf_hawking_mass(&self) -> f64 {
        let area = 4.0 * PI * self.area_radius * self.area_radius;
        hawking_mass(area, self.outer.mean_curvature(self.leaf_radius))
    }

    /// `1 - R_sigma^2 / sigma^2`, bounded below by `m / sigma`.
    pub fn radius_defect(&self) -> f64 {
        1.0 - (self.area_radius / self.sigma()).powi(2)
    }

    pub fn row(&self) -> Result<CollarRow> {
        let h = self.boundary_mean_curvatures();
        let va = collar_volume_and_area(&self.collar);
        Ok(CollarRow {
            sigma: self.sigma(),
            area_radius: self.area_radius,
            max_scalar_curvature: self.collar.max_scalar_curvature()?.value,
            h_leaf_g: h.leaf_g,
            h_leaf_collar: h.leaf_collar,
            h_fill_collar: h.fill_collar,
            h_fill_euclidean: h.fill_euclidean,
            hawking_mass: self.leaf_hawking_mass(),
            volume: va.volume,
            leaf_area: 4.0 * PI * self.area_radius * self.area_radius,
        })
    }
}

/// Outside the leaf the glued metric is the outer metric.
impl AsymptoticChart for GluedMetric {
    fn metric(&self, x: [f64; 3]) -> Mat3 {
        self.outer.metric(x)
    }

    fn metric_derivative(&self, x: [f64; 3]) -> [Mat3; 3] {
        self.outer.metric_derivative(x)
    }

    fn inner_radius(&self) -> f64 {
        self.leaf_radius
    }
}

/// One line of the per-sigma collar table; all lengths in the metric measure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollarRow {
    pub sigma: f64,
    pub area_radius: f64,
    pub max_scalar_curvature: f64,
    pub h_leaf_g: f64,
    pub h_leaf_collar: f64,
    pub h_fill_collar: f64,
    pub h_fill_euclidean: f64,
    pub hawking_mass: f64,
    pub volume: f64,
    pub leaf_area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollarDecayReport {
    pub sigmas: Vec<f64>,
    pub max_curvature: Vec<f64>,
    pub fit: ExponentFit,
}

/// Fits `max_t |R_gamma|` against sigma for boundary data `u_family(sigma)`.
pub fn collar_decay_study<F>(u_family: F, sigmas: &[f64], steps: usize) -> Result<CollarDecayReport>
where
    F: Fn(f64) -> S2Field,
{
    if sigmas.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "decay study needs at least 3 scales, got {}",
            sigmas.len()
        )));
    }
    let mut max_curvature = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let path = build_path_with_stride(&u_family(sigma), sigma, steps, steps)?;
        max_curvature.push(CollarMetric::new(path).max_scalar_curvature()?.value);
    }
    Ok(CollarDecayReport {
        sigmas: sigmas.to_vec(),
        fit: fit_exponent(sigmas, &max_curvature, 1e-300),
        max_curvature,
    })
}
