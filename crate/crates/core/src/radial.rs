//! Spherically symmetric asymptotically flat metrics `Phi(rho)^4 (d rho^2 + rho^2 g_*)`.
//!
//! The conformal factor is
//! `Phi = (1 + m / (2 rho) + eps rho^-p) (1 + shift / rho)`,
//! which covers flat space, Schwarzschild, a decaying radial perturbation and
//! the conformal shift `u^4 g` with `u = 1 + shift / rho`.

use std::f64::consts::PI;

use crate::quad::GaussLegendre;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialAFMetric {
    pub mass: f64,
    /// Amplitude and power of the perturbation `eps rho^-p`.
    pub eps: f64,
    pub power: f64,
    /// Coefficient of the `1 + shift / rho` factor.
    pub shift: f64,
}

impl RadialAFMetric {
    pub fn flat() -> Self {
        Self {
            mass: 0.0,
            eps: 0.0,
            power: 1.0,
            shift: 0.0,
        }
    }

    pub fn schwarzschild(mass: f64) -> Self {
        Self {
            mass,
            ..Self::flat()
        }
    }

    /// Schwarzschild plus `eps rho^-p` in the conformal factor. Requires
    /// `p > 1/2` so the metric is asymptotically flat at rate `p`.
    pub fn perturbed(mass: f64, eps: f64, power: f64) -> Result<Self> {
        if power <= 0.5 {
            return Err(Error::OutOfRange {
                value: power,
                min: 0.5,
                max: f64::INFINITY,
            });
        }
        Ok(Self {
            mass,
            eps,
            power,
            shift: 0.0,
        })
    }

    /// The metric `u^4 g` with `u = 1 + a / rho`.
    pub fn with_shift(self, a: f64) -> Self {
        Self {
            shift: self.shift + a,
            ..self
        }
    }

    /// Decay rate of `g - delta`.
    pub fn decay_rate(&self) -> f64 {
        if self.eps != 0.0 && self.power < 1.0 {
            self.power
        } else {
            1.0
        }
    }

    /// Exact ADM mass: `m + 2 shift`, plus `2 eps` when `p = 1`.
    pub fn adm_mass_exact(&self) -> f64 {
        let pert = if self.power == 1.0 {
            2.0 * self.eps
        } else {
            0.0
        };
        self.mass + 2.0 * self.shift + pert
    }

    /// Smallest radius at which the chart is used: the Schwarzschild
    /// horizon, and far enough out that a negative shift keeps `Phi > 0`.
    pub fn inner_radius(&self) -> f64 {
        let mut r: f64 = 0.0;
        if self.mass > 0.0 {
            r = r.max(self.mass / 2.0);
        }
        if self.shift < 0.0 {
            r = r.max(2.0 * self.shift.abs());
        }
        r
    }

    fn base(&self, rho: f64) -> (f64, f64, f64) {
        let b = 1.0 + self.mass / (2.0 * rho) + self.eps * rho.powf(-self.power);
        let bd =
            -self.mass / (2.0 * rho * rho) - self.power * self.eps * rho.powf(-self.power - 1.0);
        let bdd = self.mass / (rho * rho * rho)
            + self.power * (self.power + 1.0) * self.eps * rho.powf(-self.power - 2.0);
        (b, bd, bdd)
    }

    /// `(Phi, Phi', Phi'')` at coordinate radius `rho`.
    pub fn phi_derivs(&self, rho: f64) -> (f64, f64, f64) {
        let (b, bd, bdd) = self.base(rho);
        let s = 1.0 + self.shift / rho;
        let sd = -self.shift / (rho * rho);
        let sdd = 2.0 * self.shift / (rho * rho * rho);
        (b * s, bd * s + b * sd, bdd * s + 2.0 * bd * sd + b * sdd)
    }

    pub fn phi(&self, rho: f64) -> f64 {
        self.phi_derivs(rho).0
    }

    /// Area of the centred coordinate sphere.
    pub fn area(&self, rho: f64) -> f64 {
        4.0 * PI * rho * rho * self.phi(rho).powi(4)
    }

    /// Area radius `sqrt(A / 4 pi) = rho Phi^2`.
    pub fn area_radius(&self, rho: f64) -> f64 {
        rho * self.phi(rho).powi(2)
    }

    /// Mean curvature of the centred coordinate sphere.
    pub fn mean_curvature(&self, rho: f64) -> f64 {
        let (p, pd, _) = self.phi_derivs(rho);
        (2.0 / rho + 4.0 * pd / p) / (p * p)
    }

    /// Scalar curvature, `-8 Phi^-5 Lap_delta Phi`.
    pub fn scalar_curvature(&self, rho: f64) -> f64 {
        let (p, pd, pdd) = self.phi_derivs(rho);
        -8.0 * (pdd + 2.0 * pd / rho) / p.powi(5)
    }

    /// Metric volume of `{r0 < |x| < r1}`.
    pub fn shell_volume(&self, r0: f64, r1: f64) -> f64 {
        if r1 <= r0 {
            return 0.0;
        }
        let rule = GaussLegendre::new(24);
        // Geometric panels resolve the 1/rho structure near the inner radius.
        let (l0, l1) = ((r0.max(1e-300)).ln(), r1.ln());
        let panels = if r0 > 0.0 {
            ((l1 - l0) / 0.5).ceil().max(1.0) as usize
        } else {
            1
        };
        if r0 <= 0.0 {
            return rule.integrate(0.0, r1, |r| 4.0 * PI * r * r * self.phi(r).powi(6));
        }
        rule.integrate_composite(l0, l1, panels, |s| {
            let r = s.exp();
            4.0 * PI * r * r * r * self.phi(r).powi(6)
        })
    }

    /// Volume enclosed by the centred sphere of radius `rho`, measured from
    /// the inner radius.
    pub fn volume(&self, rho: f64) -> f64 {
        self.shell_volume(self.inner_radius(), rho)
    }

    /// Radial metric distance between coordinate spheres.
    pub fn radial_distance(&self, r0: f64, r1: f64) -> f64 {
        let rule = GaussLegendre::new(24);
        let panels = ((r1 / r0).ln() / 0.5).ceil().max(1.0) as usize;
        rule.integrate_composite(r0.ln(), r1.ln(), panels, |s| {
            let r = s.exp();
            r * self.phi(r).powi(2)
        })
    }

    /// Coordinate radius of the centred sphere with mean curvature `h`,
    /// searched outward of the minimal surface.
    pub fn radius_with_mean_curvature(&self, h: f64) -> Result<f64> {
        let floor = self.inner_radius().max(1e-12);
        let f = |r: f64| self.mean_curvature(r) - h;
        let mut hi = (2.0 / h).max(2.0 * floor);
        for _ in 0..200 {
            if f(hi) < 0.0 {
                break;
            }
            hi *= 2.0;
        }
        let mut lo = hi;
        while f(lo) < 0.0 {
            lo /= 1.25;
            if lo <= floor {
                return Err(Error::NoConvergence(format!(
                    "no centred sphere with H = {h}"
                )));
            }
        }
        crate::quad::brent(f, lo, hi, 1e-15 * hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schwarzschild_closed_forms() {
        let g = RadialAFMetric::schwarzschild(1.0);
        assert_eq!(g.inner_radius(), 0.5);
        assert!((g.phi(0.5) - 2.0).abs() < 1e-15);
        // Horizon is minimal.
        assert!(g.mean_curvature(0.5).abs() < 1e-14);
        assert!(g.scalar_curvature(3.0).abs() < 1e-14);
        assert!(RadialAFMetric::perturbed(1.0, 0.1, 0.4).is_err());
    }

    #[test]
    fn flat_volume_and_area() {
        let g = RadialAFMetric::flat();
        assert!((g.volume(2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((g.shell_volume(1.0, 2.0) - 4.0 / 3.0 * PI * 7.0).abs() < 1e-12);
        assert!((g.radial_distance(1.0, 3.0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn finds_cmc_sphere() {
        let g = RadialAFMetric::schwarzschild(1.0);
        let r = g.radius_with_mean_curvature(2.0 / 100.0).unwrap();
        assert!((g.mean_curvature(r) - 0.02).abs() < 1e-14);
        assert!(r > 90.0 && r < 100.0);
    }
}
