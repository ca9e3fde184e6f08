//! Isoperimetric profile over centred and off-centre coordinate balls, and
//! the centering integrals of `1/|x|`.
//!
//! Profile quantities are measured in the metric. Centering integrals are
//! Euclidean-coordinate quantities.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::quad::{brent, GaussLegendre};
use crate::radial::RadialAFMetric;
use crate::{Error, Result};

/// Largest coordinate radius the profile inverts over.
pub const PROFILE_RHO_MAX: f64 = 1e8;

/// A coordinate ball of radius `rho` centred at `rho * xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRegion {
    pub rho: f64,
    pub xi: [f64; 3],
}

impl TrialRegion {
    pub fn new(rho: f64, xi: [f64; 3]) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trial radius must be positive, got {rho}"
            )));
        }
        Ok(Self { rho, xi })
    }

    /// Offset along the x-axis by `|xi|`.
    pub fn along_axis(rho: f64, xi: f64) -> Result<Self> {
        Self::new(rho, [xi, 0.0, 0.0])
    }

    pub fn xi_norm(&self) -> f64 {
        let x = self.xi;
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    pub fn center_distance(&self) -> f64 {
        self.rho * self.xi_norm()
    }
}

/// Metric volume and boundary area of a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeArea {
    pub volume: f64,
    pub area: f64,
}

/// Volume and area of the coordinate ball `region` in a radial metric,
/// excluding the core `|x| < core`.
pub fn ball_volume_area(metric: &RadialAFMetric, region: &TrialRegion, core: f64) -> VolumeArea {
    let rho = region.rho;
    let d = region.center_distance();
    let rule = GaussLegendre::new(20);
    let log_integral = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = (((b / a).ln()) / 0.25).ceil().max(1.0) as usize;
        rule.integrate_composite(a.ln(), b.ln(), panels, |s| {
            let r = s.exp();
            f(r) * r
        })
    };
    if d <= 1e-12 * rho {
        return VolumeArea {
            volume: metric.shell_volume(core, rho),
            area: metric.area(rho),
        };
    }
    let inner = (d - rho).abs();
    let lo = inner.max(core).max(1e-12 * (d + rho));
    // Fraction of the coordinate sphere of radius r lying inside the ball.
    let frac = |r: f64| {
        if r + d <= rho {
            1.0
        } else {
            let kappa = (r * r + d * d - rho * rho) / (2.0 * r * d);
            (1.0 - kappa.clamp(-1.0, 1.0)) / 2.0
        }
    };
    let shell = |r: f64| 4.0 * PI * r * r * metric.phi(r).powi(6);
    let mut volume = log_integral(lo, d + rho, &|r| shell(r) * frac(r));
    if d < rho && core < inner {
        volume += metric.shell_volume(core, inner);
    }
    let area = 2.0 * PI * rho / d * log_integral(lo, d + rho, &|r| metric.phi(r).powi(4) * r);
    VolumeArea { volume, area }
}

/// A point on the isoperimetric profile restricted to centred spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub rho: f64,
    pub volume: f64,
    pub area: f64,
}

/// Area of the centred sphere enclosing metric volume `v`, counted from
/// `core` (the inner radius when `None`).
pub fn iso_profile_radial(
    metric: &RadialAFMetric,
    v: f64,
    core: Option<f64>,
) -> Result<ProfilePoint> {
    let core = core.unwrap_or_else(|| metric.inner_radius());
    let vmax = metric.shell_volume(core, PROFILE_RHO_MAX);
    if !(v > 0.0 && v <= vmax) {
        return Err(Error::OutOfRange {
            value: v,
            min: 0.0,
            max: vmax,
        });
    }
    // Solve in log radius; the volume is monotone in rho.
    let lo = if core > 0.0 { core } else { 1e-6 * v.cbrt() };
    let f = |s: f64| metric.shell_volume(core, s.exp()) - v;
    let s = brent(f, lo.ln(), PROFILE_RHO_MAX.ln(), 1e-15)?;
    let rho = s.exp();
    Ok(ProfilePoint {
        rho,
        volume: v,
        area: metric.area(rho),
    })
}

/// Comparison of an off-centre trial ball with the centred sphere of the
/// same volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialComparison {
    pub region: TrialRegion,
    pub volume: f64,
    pub area_trial: f64,
    pub area_centered: f64,
    pub rho_centered: f64,
}

impl TrialComparison {
    pub fn centered_wins(&self) -> bool {
        self.area_centered < self.area_trial
    }
}

pub fn compare_with_centered(
    metric: &RadialAFMetric,
    region: &TrialRegion,
    core: f64,
) -> Result<TrialComparison> {
    let va = ball_volume_area(metric, region, core);
    let c = iso_profile_radial(metric, va.volume, Some(core))?;
    Ok(TrialComparison {
        region: *region,
        volume: va.volume,
        area_trial: va.area,
        area_centered: c.area,
        rho_centered: c.rho,
    })
}

/// Isoperimetric deficit `V - A^{3/2} / (6 sqrt pi) - (m/2) A`.
pub fn isoperimetric_deficit(va: VolumeArea, mass: f64) -> f64 {
    va.volume - va.area.powf(1.5) / (6.0 * PI.sqrt()) - mass / 2.0 * va.area
}

/// Sharp-inequality residual `deficit / A` of the centred sphere.
pub fn sharp_residual(metric: &RadialAFMetric, rho: f64) -> f64 {
    let va = VolumeArea {
        volume: metric.volume(rho),
        area: metric.area(rho),
    };
    isoperimetric_deficit(va, metric.adm_mass_exact()) / va.area
}

/// `rho * int_{dB} 1/|x| dS` and `int_B 1/|x| dV` in coordinate measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteringIntegrals {
    pub surface: f64,
    pub volume: f64,
}

/// Closed forms, piecewise in `|xi|` against 1.
pub fn centering_integrals(region: &TrialRegion) -> CenteringIntegrals {
    let rho2 = region.rho * region.rho;
    let x = region.xi_norm();
    if x <= 1.0 {
        CenteringIntegrals {
            surface: 4.0 * PI * rho2,
            volume: 2.0 * PI * rho2 * (1.0 - x * x / 3.0),
        }
    } else {
        CenteringIntegrals {
            surface: 4.0 * PI * rho2 / x,
            volume: 4.0 * PI * rho2 / (3.0 * x),
        }
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimates of [`centering_integrals`] from uniform samples on
/// the sphere and in the ball.
pub fn centering_integrals_monte_carlo(
    region: &TrialRegion,
    samples: usize,
    seed: u64,
) -> (Estimate, Estimate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = region.rho;
    let c = [rho * region.xi[0], rho * region.xi[1], rho * region.xi[2]];
    let inv = |p: [f64; 3]| 1.0 / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let mean_se = |vals: &[f64], scale: f64| {
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        Estimate {
            value: scale * m,
            std_error: scale * (var / n).sqrt(),
        }
    };
    let mut surf = Vec::with_capacity(samples);
    let mut vol = Vec::with_capacity(samples);
    for _ in 0..samples {
        let n: [f64; 3] = UnitSphere.sample(&mut rng);
        surf.push(inv([
            c[0] + rho * n[0],
            c[1] + rho * n[1],
            c[2] + rho * n[2],
        ]));
        let r = rho * rng.gen::<f64>().cbrt();
        let n: [f64; 3] = UnitSphere.sample(&mut rng);
        vol.push(inv([c[0] + r * n[0], c[1] + r * n[1], c[2] + r * n[2]]));
    }
    let area = 4.0 * PI * rho * rho;
    let volume = 4.0 / 3.0 * PI * rho.powi(3);
    (mean_se(&surf, rho * area), mean_se(&vol, volume))
}

/// The closed-form lower bound `2 eps0 pi m |xi|^2 rho^2 / (1 + |xi|^2)`.
pub fn centering_deficit(region: &TrialRegion, mass: f64, eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::OutOfRange {
            value: eps0,
            min: 0.0,
            max: 1.0,
        });
    }
    if mass <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let x2 = region.xi_norm().powi(2);
    Ok(2.0 * eps0 * PI * mass * x2 * region.rho.powi(2) / (1.0 + x2))
}

/// The deficit gained by a trial ball under the conformal shift
/// `g -> (1 + A/r)^4 g`, `A = -eps0 m / 2`, which lowers the mass from `m`
/// to `(1 - eps0) m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteringModel {
    pub region: TrialRegion,
    pub before: VolumeArea,
    pub after: VolumeArea,
    /// `D(B, g~) - D(B, g)` with each deficit using its own mass.
    pub measured: f64,
    pub bound: f64,
}

pub fn centering_model(region: &TrialRegion, mass: f64, eps0: f64) -> Result<CenteringModel> {
    let bound = centering_deficit(region, mass, eps0)?;
    let g = RadialAFMetric::schwarzschild(mass);
    let gt = g.with_shift(-eps0 * mass / 2.0);
    let core = g.inner_radius().max(gt.inner_radius());
    let before = ball_volume_area(&g, region, core);
    let after = ball_volume_area(&gt, region, core);
    let measured = isoperimetric_deficit(after, gt.adm_mass_exact())
        - isoperimetric_deficit(before, g.adm_mass_exact());
    Ok(CenteringModel {
        region: *region,
        before,
        after,
        measured,
        bound,
    })
}
