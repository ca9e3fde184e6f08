//! Real spherical-harmonic transforms on a [`SphereGrid`].
//!
//! The basis is `P_lm(cos theta) cos(m phi)` and `P_lm(cos theta) sin(m phi)`
//! with `P_lm` normalised to unit L2 norm on [-1, 1].

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;

use super::grid::{legendre_table, lm_count, lm_index, SphereGrid};

/// Spectral coefficients up to the grid's truncation degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    lmax: usize,
    /// Cosine coefficients, packed by [`lm_index`].
    pub(crate) cos: Vec<f64>,
    /// Sine coefficients; entries with `m = 0` are always zero.
    pub(crate) sin: Vec<f64>,
}

impl SpectralCoeffs {
    pub fn zeros(lmax: usize) -> Self {
        let n = lm_count(lmax);
        Self {
            lmax,
            cos: vec![0.0; n],
            sin: vec![0.0; n],
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn cos_coeff(&self, l: usize, m: usize) -> f64 {
        self.cos[lm_index(self.lmax, l, m)]
    }

    pub fn sin_coeff(&self, l: usize, m: usize) -> f64 {
        self.sin[lm_index(self.lmax, l, m)]
    }

    pub fn set(&mut self, l: usize, m: usize, cos: f64, sin: f64) {
        let k = lm_index(self.lmax, l, m);
        self.cos[k] = cos;
        self.sin[k] = if m == 0 { 0.0 } else { sin };
    }

    /// Applies a degree-dependent multiplier `g(l)` to every coefficient.
    pub fn scale_by_degree<F: Fn(usize) -> f64>(&self, g: F) -> Self {
        let mut out = self.clone();
        for m in 0..=self.lmax {
            for l in m..=self.lmax {
                let k = lm_index(self.lmax, l, m);
                let s = g(l);
                out.cos[k] *= s;
                out.sin[k] *= s;
            }
        }
        out
    }

    /// Coefficients of the longitude derivative.
    pub fn d_phi(&self) -> Self {
        let mut out = Self::zeros(self.lmax);
        for m in 1..=self.lmax {
            let mf = m as f64;
            for l in m..=self.lmax {
                let k = lm_index(self.lmax, l, m);
                out.cos[k] = mf * self.sin[k];
                out.sin[k] = -mf * self.cos[k];
            }
        }
        out
    }

    /// Largest coefficient magnitude at degree `l`.
    pub fn degree_amplitude(&self, l: usize) -> f64 {
        (0..=l)
            .map(|m| {
                let k = lm_index(self.lmax, l, m);
                self.cos[k].abs().max(self.sin[k].abs())
            })
            .fold(0.0, f64::max)
    }
}

impl SphereGrid {
    /// Forward transform of grid values.
    pub fn analyze(&self, values: &[f64]) -> SpectralCoeffs {
        assert_eq!(values.len(), self.len());
        let lmax = self.lmax();
        let nphi = self.n_phi();
        let dphi = 2.0 * PI / nphi as f64;
        let mut out = SpectralCoeffs::zeros(lmax);
        let mut buf = vec![Complex::new(0.0, 0.0); nphi];
        for i in 0..self.n_theta() {
            for (b, &v) in buf.iter_mut().zip(&values[i * nphi..(i + 1) * nphi]) {
                *b = Complex::new(v, 0.0);
            }
            self.fft_forward().process(&mut buf);
            let w = self.lat_weights()[i];
            let p = self.plm_row(i);
            for m in 0..=lmax {
                // sum f cos(m phi) = Re F_m, sum f sin(m phi) = -Im F_m.
                let norm = if m == 0 { 2.0 * PI } else { PI };
                let cm = buf[m].re * dphi * w / norm;
                let sm = -buf[m].im * dphi * w / norm;
                for l in m..=lmax {
                    let k = lm_index(lmax, l, m);
                    out.cos[k] += p[k] * cm;
                    out.sin[k] += p[k] * sm;
                }
            }
        }
        for l in 0..=lmax {
            out.sin[lm_index(lmax, l, 0)] = 0.0;
        }
        out
    }

    /// Inverse transform onto the grid.
    pub fn synthesize(&self, coeffs: &SpectralCoeffs) -> Vec<f64> {
        self.synthesize_with(coeffs, false)
    }

    /// Colatitude derivative of the represented field, evaluated on the grid.
    pub fn synthesize_d_theta(&self, coeffs: &SpectralCoeffs) -> Vec<f64> {
        self.synthesize_with(coeffs, true)
    }

    fn synthesize_with(&self, coeffs: &SpectralCoeffs, d_theta: bool) -> Vec<f64> {
        let lmax = self.lmax();
        assert_eq!(coeffs.lmax, lmax, "coefficient degree does not match grid");
        let nphi = self.n_phi();
        let mut out = vec![0.0; self.len()];
        let mut cm = vec![0.0; lmax + 1];
        let mut sm = vec![0.0; lmax + 1];
        let mut buf = vec![Complex::new(0.0, 0.0); nphi];
        for i in 0..self.n_theta() {
            let p = if d_theta {
                self.dplm_row(i)
            } else {
                self.plm_row(i)
            };
            for m in 0..=lmax {
                let mut ac = 0.0;
                let mut asn = 0.0;
                for l in m..=lmax {
                    let k = lm_index(lmax, l, m);
                    ac += coeffs.cos[k] * p[k];
                    asn += coeffs.sin[k] * p[k];
                }
                cm[m] = ac;
                sm[m] = asn;
            }
            // Row values are Re sum_m (c_m - i s_m) exp(i m phi).
            for b in buf.iter_mut() {
                *b = Complex::new(0.0, 0.0);
            }
            for m in 0..=lmax {
                buf[m] = Complex::new(cm[m], -sm[m]);
            }
            self.fft_inverse().process(&mut buf);
            for (o, b) in out[i * nphi..(i + 1) * nphi].iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
        out
    }

    /// Evaluates the represented field at an arbitrary point.
    pub fn evaluate(&self, coeffs: &SpectralCoeffs, theta: f64, phi: f64) -> f64 {
        evaluate_at(coeffs, theta, phi)
    }
}

/// Point evaluation of a spectral expansion, independent of any grid.
pub fn evaluate_at(coeffs: &SpectralCoeffs, theta: f64, phi: f64) -> f64 {
    let lmax = coeffs.lmax;
    let (p, _) = legendre_table(lmax, theta.cos(), theta.sin().max(1e-300));
    let mut total = 0.0;
    for m in 0..=lmax {
        let (s, c) = (m as f64 * phi).sin_cos();
        for l in m..=lmax {
            let k = lm_index(lmax, l, m);
            total += p[k] * (coeffs.cos[k] * c + coeffs.sin[k] * s);
        }
    }
    total
}

/// Convenience for building coefficient sets in tests and scenarios.
pub fn coeffs_from_terms(
    grid: &Arc<SphereGrid>,
    terms: &[(usize, usize, f64, f64)],
) -> SpectralCoeffs {
    let mut c = SpectralCoeffs::zeros(grid.lmax());
    for &(l, m, a, b) in terms {
        c.set(l, m, a, b);
    }
    c
}
