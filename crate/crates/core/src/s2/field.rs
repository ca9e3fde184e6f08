use std::sync::Arc;

use super::grid::SphereGrid;
use super::sht::SpectralCoeffs;
use crate::{Error, Result};

/// A scalar field sampled on a [`SphereGrid`].
#[derive(Debug, Clone)]
pub struct S2Field {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl S2Field {
    /// Wraps raw samples. Rejects mismatched lengths and non-finite values.
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ResolutionMismatch {
                left: format!("{} samples", values.len()),
                right: format!("{}x{} grid", grid.n_theta(), grid.n_phi()),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Arc<SphereGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        Self::from_raw(grid.clone(), vec![c; grid.len()])
    }

    pub fn zeros(grid: &Arc<SphereGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(theta, phi)` at the grid nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<SphereGrid>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.theta() {
            for &p in grid.phi() {
                values.push(f(t, p));
            }
        }
        Self::from_raw(grid.clone(), values)
    }

    pub fn from_coeffs(grid: &Arc<SphereGrid>, coeffs: &SpectralCoeffs) -> Self {
        Self::from_raw(grid.clone(), grid.synthesize(coeffs))
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Spherical-harmonic truncation degree of the underlying grid.
    pub fn degree(&self) -> usize {
        self.grid.lmax()
    }

    pub fn coeffs(&self) -> SpectralCoeffs {
        self.grid.analyze(&self.values)
    }

    pub fn same_resolution(&self, other: &S2Field) -> bool {
        self.grid.n_theta() == other.grid.n_theta()
    }

    pub(crate) fn check_resolution(&self, other: &S2Field) -> Result<()> {
        if self.same_resolution(other) {
            Ok(())
        } else {
            Err(Error::ResolutionMismatch {
                left: format!("N_theta = {}", self.grid.n_theta()),
                right: format!("N_theta = {}", other.grid.n_theta()),
            })
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination; panics on resolution mismatch.
    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &S2Field, f: F) -> Self {
        assert!(self.same_resolution(other), "resolution mismatch");
        Self::from_raw(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    /// Integral against the round unit-sphere area form.
    pub fn round_integral(&self) -> f64 {
        let n_phi = self.grid.n_phi();
        (0..self.grid.n_theta())
            .map(|i| {
                let row: f64 = self.values[i * n_phi..(i + 1) * n_phi].iter().sum();
                row * self.grid.area_weight(i)
            })
            .sum()
    }
}

/// The metric `exp(2 u) sigma^2 g_*` on the sphere, where `g_*` is the
/// round unit metric.
#[derive(Debug, Clone)]
pub struct S2ConformalMetric {
    pub sigma: f64,
    pub logfactor: S2Field,
}

impl S2ConformalMetric {
    pub fn new(sigma: f64, logfactor: S2Field) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma, logfactor })
    }

    pub fn round(grid: &Arc<SphereGrid>, sigma: f64) -> Self {
        Self {
            sigma,
            logfactor: S2Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.logfactor.grid()
    }

    /// Pointwise density of the area form relative to `g_*`.
    pub fn area_density(&self) -> S2Field {
        let s2 = self.sigma * self.sigma;
        self.logfactor.map(|u| (2.0 * u).exp() * s2)
    }

    pub fn area(&self) -> f64 {
        self.area_density().round_integral()
    }

    /// Gauss curvature, `exp(-2u) sigma^-2 (1 - Lap_* u)`.
    pub fn gauss_curvature(&self) -> S2Field {
        let lap = super::ops::round_laplacian(&self.logfactor);
        let s2 = self.sigma * self.sigma;
        self.logfactor
            .zip_map(&lap, |u, l| (-2.0 * u).exp() / s2 * (1.0 - l))
    }
}
