use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::quad::GaussLegendre;

/// Gauss-Legendre latitudes times uniform longitudes, with the spectral
/// tables needed for real spherical-harmonic transforms up to degree
/// `n_theta - 1`.
///
/// Values on the grid are stored row-major: latitude index first, with
/// colatitude increasing along the rows.
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    lmax: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    /// Gauss-Legendre weights in `cos(theta)`.
    lat_weights: Vec<f64>,
    phi: Vec<f64>,
    /// Normalised associated Legendre functions and their theta-derivatives,
    /// indexed `i * nlm + lm_index(l, m)`.
    plm: Vec<f64>,
    dplm: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereGrid")
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish()
    }
}

impl SphereGrid {
    /// Builds the grid with `n_theta` latitudes and `2 n_theta` longitudes.
    pub fn new(n_theta: usize) -> Arc<Self> {
        assert!(n_theta >= 2, "need at least two latitudes");
        let n_phi = 2 * n_theta;
        let lmax = n_theta - 1;
        let rule = GaussLegendre::new(n_theta);
        // Increasing colatitude means decreasing cos(theta).
        let cos_theta: Vec<f64> = rule.nodes.iter().rev().copied().collect();
        let lat_weights: Vec<f64> = rule.weights.iter().rev().copied().collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let phi: Vec<f64> = (0..n_phi)
            .map(|j| 2.0 * PI * j as f64 / n_phi as f64)
            .collect();

        let nlm = lm_count(lmax);
        let mut plm = vec![0.0; n_theta * nlm];
        let mut dplm = vec![0.0; n_theta * nlm];
        for i in 0..n_theta {
            let (p, d) = legendre_table(lmax, cos_theta[i], sin_theta[i]);
            plm[i * nlm..(i + 1) * nlm].copy_from_slice(&p);
            dplm[i * nlm..(i + 1) * nlm].copy_from_slice(&d);
        }

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_phi);
        let fft_inverse = planner.plan_fft_inverse(n_phi);
        Arc::new(Self {
            n_theta,
            n_phi,
            lmax,
            theta,
            cos_theta,
            sin_theta,
            lat_weights,
            phi,
            plm,
            dplm,
            fft_forward,
            fft_inverse,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spherical-harmonic truncation degree.
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn lat_weights(&self) -> &[f64] {
        &self.lat_weights
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Round-sphere area weight of node `(i, j)`; the weights sum to 4 pi.
    #[inline]
    pub fn area_weight(&self, i: usize) -> f64 {
        self.lat_weights[i] * 2.0 * PI / self.n_phi as f64
    }

    /// Unit vector of grid node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 3] {
        let (s, c) = (self.sin_theta[i], self.cos_theta[i]);
        let p = self.phi[j];
        [s * p.cos(), s * p.sin(), c]
    }

    pub(crate) fn nlm(&self) -> usize {
        lm_count(self.lmax)
    }

    pub(crate) fn plm_row(&self, i: usize) -> &[f64] {
        let n = self.nlm();
        &self.plm[i * n..(i + 1) * n]
    }

    pub(crate) fn dplm_row(&self, i: usize) -> &[f64] {
        let n = self.nlm();
        &self.dplm[i * n..(i + 1) * n]
    }

    pub(crate) fn fft_forward(&self) -> &dyn Fft<f64> {
        &*self.fft_forward
    }

    pub(crate) fn fft_inverse(&self) -> &dyn Fft<f64> {
        &*self.fft_inverse
    }
}

/// Number of `(l, m)` pairs with `0 <= m <= l <= lmax`.
pub(crate) fn lm_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Packed index of `(l, m)`, grouped by order `m`.
#[inline]
pub(crate) fn lm_index(lmax: usize, l: usize, m: usize) -> usize {
    debug_assert!(m <= l && l <= lmax);
    // Orders below m occupy sum_{k<m} (lmax + 1 - k) slots.
    m * (lmax + 1) - m * m.saturating_sub(1) / 2 + (l - m)
}

/// Legendre functions normalised so that `int_{-1}^{1} P_lm(x)^2 dx = 1`
/// (no Condon-Shortley phase), together with their derivatives in theta.
pub(crate) fn legendre_table(lmax: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let n = lm_count(lmax);
    let mut p = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pmm = (0.5f64).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        p[lm_index(lmax, m, m)] = pmm;
        if m < lmax {
            p[lm_index(lmax, m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        }
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[lm_index(lmax, l, m)] =
                a * (x * p[lm_index(lmax, l - 1, m)] - b * p[lm_index(lmax, l - 2, m)]);
        }
        for l in m..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let lower = if l > m {
                ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt()
                    * p[lm_index(lmax, l - 1, m)]
            } else {
                0.0
            };
            d[lm_index(lmax, l, m)] = (lf * x * p[lm_index(lmax, l, m)] - lower) / s;
        }
    }
    (p, d)
}
