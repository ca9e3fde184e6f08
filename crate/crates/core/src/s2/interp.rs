//! Local bicubic interpolation of grid samples at arbitrary points.
//!
//! Longitude is interpolated with periodic cubic Lagrange stencils; colatitude
//! with cubic Lagrange on the (non-uniform) Gauss nodes, continuing across the
//! poles onto the antipodal meridian.

use std::f64::consts::PI;

use super::grid::{legendre_table, lm_index, SphereGrid};
use super::sht::SpectralCoeffs;

/// Spherical coordinates `(theta, phi)` of a unit vector, `phi` in `[0, 2 pi)`.
pub fn to_spherical(p: [f64; 3]) -> (f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let theta = (p[2] / r).clamp(-1.0, 1.0).acos();
    let mut phi = p[1].atan2(p[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

pub fn from_spherical(theta: f64, phi: f64) -> [f64; 3] {
    let s = theta.sin();
    [s * phi.cos(), s * phi.sin(), theta.cos()]
}

fn lagrange4(xs: [f64; 4], x: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                w[a] *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
    }
    w
}

/// Precomputed bicubic stencil at one point, reusable across fields.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    /// Flat grid offsets of the 4 x 4 stencil nodes.
    nodes: [[usize; 4]; 4],
    wt: [f64; 4],
    wp: [f64; 4],
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut total = 0.0;
        for k in 0..4 {
            let mut acc = 0.0;
            for q in 0..4 {
                acc += self.wp[q] * values[self.nodes[k][q]];
            }
            total += self.wt[k] * acc;
        }
        total
    }
}

/// Bicubic stencil on latitude rows `th` (increasing colatitude, away from
/// the poles) times `np` uniform longitudes.
fn stencil_on(th: &[f64], np: usize, theta: f64, phi: f64) -> Stencil {
    let nt = th.len() as isize;
    // Base latitude index: largest node with theta_i <= theta (may be -1).
    let base = th.partition_point(|&t| t <= theta) as isize - 1;
    let rows: [isize; 4] = [base - 1, base, base + 1, base + 2];
    let mut lat = [0.0; 4];
    let mut src = [(0usize, false); 4];
    for (k, &r) in rows.iter().enumerate() {
        if r < 0 {
            let m = (-r - 1) as usize;
            lat[k] = -th[m];
            src[k] = (m, true);
        } else if r >= nt {
            let m = (2 * nt - r - 1) as usize;
            lat[k] = 2.0 * PI - th[m];
            src[k] = (m, true);
        } else {
            lat[k] = th[r as usize];
            src[k] = (r as usize, false);
        }
    }
    let wt = lagrange4(lat, theta);

    let dphi = 2.0 * PI / np as f64;
    let x = phi.rem_euclid(2.0 * PI) / dphi;
    let j0 = x.floor() as isize;
    let fx = x - j0 as f64;
    let wp = lagrange4([-1.0, 0.0, 1.0, 2.0], fx);

    let mut nodes = [[0usize; 4]; 4];
    for k in 0..4 {
        let (row, flipped) = src[k];
        // Rows continued across a pole sit on the antipodal meridian.
        let shift = if flipped { np / 2 } else { 0 } as isize;
        for q in 0..4 {
            let j = (j0 - 1 + q as isize + shift).rem_euclid(np as isize) as usize;
            nodes[k][q] = row * np + j;
        }
    }
    Stencil { nodes, wt, wp }
}

impl SphereGrid {
    /// Bicubic stencil at `(theta, phi)`.
    pub fn stencil(&self, theta: f64, phi: f64) -> Stencil {
        stencil_on(self.theta(), self.n_phi(), theta, phi)
    }

    /// Interpolates grid samples `values` at `(theta, phi)`.
    pub fn interpolate(&self, values: &[f64], theta: f64, phi: f64) -> f64 {
        self.stencil(theta, phi).apply(values)
    }

    /// Interpolation at a unit vector.
    pub fn interpolate_at(&self, values: &[f64], p: [f64; 3]) -> f64 {
        let (t, ph) = to_spherical(p);
        self.interpolate(values, t, ph)
    }
}

/// Samples of a band-limited field on a uniform-in-colatitude grid, used
/// for fast evaluation at many off-grid points.
#[derive(Debug, Clone)]
pub struct LatLonTable {
    theta: Vec<f64>,
    n_phi: usize,
    values: Vec<f64>,
}

impl LatLonTable {
    /// Synthesises `coeffs` on `n_theta` cell-centred latitudes and
    /// `2 n_theta` longitudes.
    pub fn from_coeffs(coeffs: &SpectralCoeffs, n_theta: usize) -> Self {
        let lmax = coeffs.lmax();
        let n_phi = 2 * n_theta;
        let theta: Vec<f64> = (0..n_theta)
            .map(|i| (i as f64 + 0.5) * PI / n_theta as f64)
            .collect();
        let mut values = vec![0.0; n_theta * n_phi];
        let mut cm = vec![0.0; lmax + 1];
        let mut sm = vec![0.0; lmax + 1];
        for (i, &t) in theta.iter().enumerate() {
            let (p, _) = legendre_table(lmax, t.cos(), t.sin());
            for m in 0..=lmax {
                let (mut c, mut s) = (0.0, 0.0);
                for l in m..=lmax {
                    c += coeffs.cos_coeff(l, m) * p[lm_index(lmax, l, m)];
                    s += coeffs.sin_coeff(l, m) * p[lm_index(lmax, l, m)];
                }
                cm[m] = c;
                sm[m] = s;
            }
            for j in 0..n_phi {
                let ph = 2.0 * PI * j as f64 / n_phi as f64;
                values[i * n_phi + j] = (0..=lmax)
                    .map(|m| {
                        let (sn, cs) = (m as f64 * ph).sin_cos();
                        cm[m] * cs + sm[m] * sn
                    })
                    .sum();
            }
        }
        Self {
            theta,
            n_phi,
            values,
        }
    }

    pub fn sample(&self, theta: f64, phi: f64) -> f64 {
        stencil_on(&self.theta, self.n_phi, theta, phi).apply(&self.values)
    }

    pub fn sample_at(&self, p: [f64; 3]) -> f64 {
        let (t, ph) = to_spherical(p);
        self.sample(t, ph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_smooth_fields() {
        let grid = SphereGrid::new(32);
        let f = |p: [f64; 3]| p[0] * p[1] + 0.3 * p[2] - 0.2 * p[0];
        let vals: Vec<f64> = (0..grid.n_theta())
            .flat_map(|i| (0..grid.n_phi()).map(move |j| (i, j)))
            .map(|(i, j)| f(grid.point(i, j)))
            .collect();
        assert!(
            (grid.interpolate(&vals, grid.theta()[5], grid.phi()[7]) - vals[grid.index(5, 7)])
                .abs()
                < 1e-14
        );
        for &(t, p) in &[(0.01, 1.0), (1.3, 6.2), (3.13, 0.4), (2.0, 3.3)] {
            let exact = f(from_spherical(t, p));
            let got = grid.interpolate(&vals, t, p);
            assert!((got - exact).abs() < 5e-5, "{t} {p}: {got} vs {exact}");
        }
    }
}
