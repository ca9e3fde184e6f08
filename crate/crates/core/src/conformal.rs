//! The conformal equation `Lap u - f u = 0`, `u -> 1` at infinity, in the
//! spherically symmetric reduction, and the mass shift of `u^4 g`.
//!
//! With `P = psi^2 u'` the equation is the first-order system
//! `u' = P / psi^2`, `P' = f psi^2 u` along the radial geodesic coordinate,
//! and `u_r = P / (Phi^2 r^2)`, `P_r = f Phi^6 r^2 u` in the outer chart
//! `Phi^4 (dr^2 + r^2 g_*)`. `P` is the same quantity in both, so the
//! handover needs no conversion. The regular solution from the centre is
//! rescaled so that the Robin condition `(u - 1)' + (u - 1)/r = 0` holds at
//! the outer radius.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fit::{fit_exponent, fit_line, ExponentFit};
use crate::mass::{adm_mass, ConformallyFlatChart, MassReport};
use crate::radial::RadialAFMetric;
use crate::smooth::{ScalarAux, SmoothedMetric};
use crate::{Error, Result};

/// A stretch of the inner profile in its own local coordinate.
pub struct Piece<'a> {
    pub start: f64,
    pub end: f64,
    /// Area radius `psi` at local coordinate `x`.
    pub psi: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub source: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub steps: usize,
}

/// A radial conformal problem: inner pieces in geodesic distance, joined
/// to an outer chart at `r_switch`. The first piece starts at the centre.
pub struct RadialProblem<'a> {
    pub pieces: Vec<Piece<'a>>,
    pub outer: RadialAFMetric,
    pub r_switch: f64,
    pub outer_source: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    /// Length scale for the Robin radius and the fit window.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConformalOptions {
    /// Robin radius in units of `scale`.
    pub r_max: f64,
    /// A-fit window in units of `scale`.
    pub window: (f64, f64),
    /// RK4 steps in the outer chart.
    pub outer_steps: usize,
    /// Multiplier on every piece's step count (refinement studies).
    pub refine: usize,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        Self {
            r_max: 40.0,
            window: (5.0, 20.0),
            outer_steps: 4000,
            refine: 1,
        }
    }
}

/// Solution samples. Inner samples carry the area radius, outer samples
/// the chart radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadialSample {
    pub psi: f64,
    pub u: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OuterSample {
    pub r: f64,
    pub u: f64,
    pub u_r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalSolution {
    pub inner: Vec<RadialSample>,
    pub outer: Vec<OuterSample>,
    #[serde(skip)]
    pub metric: Option<RadialAFMetric>,
    /// Coefficient of `1/r`.
    pub a: f64,
    /// `A` refitted on the upper half of the window.
    pub a_half_window: f64,
    /// Step-doubling estimate of `max |u_h - u_{h/2}|` at the outer sample points.
    pub residual: f64,
    pub window: (f64, f64),
    pub min_u: f64,
    /// `int (-f u^2 - |grad u|^2) dV`, including the harmonic tail.
    pub identity_rhs: f64,
}

impl ConformalSolution {
    /// `|4 pi A - rhs| / |rhs|` (absolute when both vanish).
    pub fn identity_error(&self) -> f64 {
        let lhs = 4.0 * PI * self.a;
        let d = (lhs - self.identity_rhs).abs();
        if self.identity_rhs.abs() > 1e-300 {
            d / self.identity_rhs.abs()
        } else {
            d
        }
    }

    /// `u` and `u_r` at chart radius `r` by cubic Hermite interpolation.
    pub fn outer_at(&self, r: f64) -> (f64, f64) {
        let s = &self.outer;
        let k = s.partition_point(|p| p.r <= r).clamp(1, s.len() - 1);
        let (a, b) = (&s[k - 1], &s[k]);
        let h = b.r - a.r;
        let x = ((r - a.r) / h).clamp(0.0, 1.0);
        let (x2, x3) = (x * x, x * x * x);
        let u = (2.0 * x3 - 3.0 * x2 + 1.0) * a.u
            + (x3 - 2.0 * x2 + x) * h * a.u_r
            + (-2.0 * x3 + 3.0 * x2) * b.u
            + (x3 - x2) * h * b.u_r;
        let du = ((6.0 * x2 - 6.0 * x) * a.u
            + (3.0 * x2 - 4.0 * x + 1.0) * h * a.u_r
            + (-6.0 * x2 + 6.0 * x) * b.u
            + (3.0 * x2 - 2.0 * x) * h * b.u_r)
            / h;
        (u, du)
    }

    /// `sup |u - 1|` over inner points with `psi >= radius` and all outer points.
    pub fn sup_deviation_beyond(&self, radius: f64) -> f64 {
        let inner = self
            .inner
            .iter()
            .filter(|p| p.psi >= radius)
            .map(|p| (p.u - 1.0).abs());
        let outer = self.outer.iter().map(|p| (p.u - 1.0).abs());
        inner.chain(outer).fold(0.0, f64::max)
    }
}

struct Trajectory {
    inner: Vec<RadialSample>,
    outer: Vec<OuterSample>,
    /// `int (f u^2 + |grad u|^2) dV` up to the last outer node.
    energy: f64,
}

/// Composite Simpson over equally spaced samples (odd count).
fn simpson(h: f64, ys: &[f64]) -> f64 {
    let n = ys.len();
    debug_assert!(n % 2 == 1);
    let mut s = ys[0] + ys[n - 1];
    for (k, y) in ys.iter().enumerate().take(n - 1).skip(1) {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * y;
    }
    s * h / 3.0
}

fn integrate(problem: &RadialProblem, opts: &ConformalOptions, scale_steps: usize) -> Trajectory {
    let mut inner = Vec::new();
    let (mut u, mut p) = (1.0, 0.0);
    let mut energy = 0.0;
    for (idx, piece) in problem.pieces.iter().enumerate() {
        let n = 2 * ((piece.steps * opts.refine * scale_steps).div_ceil(2)).max(1);
        let mut start = piece.start;
        if idx == 0 && (piece.psi)(start) == 0.0 {
            // Regular series at the centre: u = 1 + f(0) s^2 / 6.
            let s0 = 1e-6 * (piece.end - piece.start);
            let f0 = (piece.source)(start);
            u = 1.0 + f0 * s0 * s0 / 6.0;
            p = f0 * s0.powi(3) / 3.0;
            start += s0;
        }
        let h = (piece.end - start) / n as f64;
        let rhs = |x: f64, u: f64, p: f64| {
            let psi = (piece.psi)(x);
            (p / (psi * psi), (piece.source)(x) * psi * psi * u)
        };
        let mut dens = Vec::with_capacity(n + 1);
        let density = |x: f64, u: f64, p: f64| {
            let psi = (piece.psi)(x);
            let du = p / (psi * psi);
            4.0 * PI * psi * psi * ((piece.source)(x) * u * u + du * du)
        };
        dens.push(density(start, u, p));
        inner.push(RadialSample {
            psi: (piece.psi)(start),
            u,
            flux: p,
        });
        for k in 0..n {
            let x = start + k as f64 * h;
            let (k1u, k1p) = rhs(x, u, p);
            let (k2u, k2p) = rhs(x + h / 2.0, u + h / 2.0 * k1u, p + h / 2.0 * k1p);
            let (k3u, k3p) = rhs(x + h / 2.0, u + h / 2.0 * k2u, p + h / 2.0 * k2p);
            let (k4u, k4p) = rhs(x + h, u + h * k3u, p + h * k3p);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            dens.push(density(x + h, u, p));
            inner.push(RadialSample {
                psi: (piece.psi)(x + h),
                u,
                flux: p,
            });
        }
        energy += simpson(h, &dens);
    }

    // Outer chart in l = ln r.
    let m = &problem.outer;
    let r_max = opts.r_max * problem.scale;
    let n = 2 * (opts.outer_steps * opts.refine * scale_steps).div_ceil(2);
    let (l0, l1) = (problem.r_switch.ln(), r_max.ln());
    let h = (l1 - l0) / n as f64;
    let rhs = |l: f64, u: f64, p: f64| {
        let r = l.exp();
        let ph = m.phi(r);
        let f = (problem.outer_source)(r);
        (r * p / (ph * ph * r * r), r * f * ph.powi(6) * r * r * u)
    };
    let density = |l: f64, u: f64, p: f64| {
        let r = l.exp();
        let ph = m.phi(r);
        let ur = p / (ph * ph * r * r);
        let f = (problem.outer_source)(r);
        4.0 * PI * ph.powi(6) * r * r * r * (f * u * u + ur * ur / ph.powi(4))
    };
    let sample = |l: f64, u: f64, p: f64| {
        let r = l.exp();
        let ph = m.phi(r);
        OuterSample {
            r,
            u,
            u_r: p / (ph * ph * r * r),
        }
    };
    let mut outer = vec![sample(l0, u, p)];
    let mut dens = vec![density(l0, u, p)];
    for k in 0..n {
        let l = l0 + k as f64 * h;
        let (k1u, k1p) = rhs(l, u, p);
        let (k2u, k2p) = rhs(l + h / 2.0, u + h / 2.0 * k1u, p + h / 2.0 * k1p);
        let (k3u, k3p) = rhs(l + h / 2.0, u + h / 2.0 * k2u, p + h / 2.0 * k2p);
        let (k4u, k4p) = rhs(l + h, u + h * k3u, p + h * k3p);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        outer.push(sample(l + h, u, p));
        dens.push(density(l + h, u, p));
    }
    energy += simpson(h, &dens);
    Trajectory {
        inner,
        outer,
        energy,
    }
}

/// Solves the radial problem. The equation is linear, so the regular
/// solution with `u(0) = 1` is scaled to satisfy the Robin condition.
pub fn solve_radial(problem: &RadialProblem, opts: &ConformalOptions) -> Result<ConformalSolution> {
    let fine = integrate(problem, opts, 2);
    let coarse = integrate(problem, opts, 1);
    let last = *fine.outer.last().unwrap();
    let denom = last.u_r + last.u / last.r;
    let lambda = (1.0 / last.r) / denom;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::ConformalFailure(format!(
            "Robin rescaling factor {lambda} is not positive; the potential is too large \
             for a positive solution"
        )));
    }
    let min_u = fine
        .inner
        .iter()
        .map(|s| s.u)
        .chain(fine.outer.iter().map(|s| s.u))
        .fold(f64::INFINITY, f64::min);
    if !(min_u > 0.0) {
        return Err(Error::ConformalFailure(format!(
            "solution reaches u = {min_u} <= 0; the negative part of f is too large"
        )));
    }
    let coarse_last = *coarse.outer.last().unwrap();
    let lambda_c = (1.0 / coarse_last.r) / (coarse_last.u_r + coarse_last.u / coarse_last.r);
    let residual = fine
        .outer
        .iter()
        .step_by(2)
        .zip(&coarse.outer)
        .map(|(a, b)| (lambda * a.u - lambda_c * b.u).abs())
        .fold(0.0, f64::max);

    let inner: Vec<RadialSample> = fine
        .inner
        .iter()
        .map(|s| RadialSample {
            psi: s.psi,
            u: lambda * s.u,
            flux: lambda * s.flux,
        })
        .collect();
    let outer: Vec<OuterSample> = fine
        .outer
        .iter()
        .map(|s| OuterSample {
            r: s.r,
            u: lambda * s.u,
            u_r: lambda * s.u_r,
        })
        .collect();

    let window = (opts.window.0 * problem.scale, opts.window.1 * problem.scale);
    let fit_on = |lo: f64, hi: f64| -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = outer
            .iter()
            .filter(|s| s.r >= lo && s.r <= hi)
            .map(|s| (1.0 / s.r, s.r * (s.u - 1.0)))
            .unzip();
        fit_line(&xs, &ys)
            .map(|f| f.intercept)
            .ok_or_else(|| Error::ConformalFailure("fit window holds too few samples".into()))
    };
    let a = fit_on(window.0, window.1)?;
    let a_half_window = fit_on((window.0 * window.1).sqrt(), window.1)?;

    // Beyond r_max the solution is harmonic; its energy is -4 pi v P there.
    let end = outer.last().unwrap();
    let ph = problem.outer.phi(end.r);
    let p_end = ph * ph * end.r * end.r * end.u_r;
    let tail = -4.0 * PI * (end.u - 1.0) * p_end;
    let identity_rhs = -(lambda * lambda * fine.energy + tail);

    Ok(ConformalSolution {
        inner,
        outer,
        metric: Some(problem.outer),
        a,
        a_half_window,
        residual,
        window,
        min_u: lambda * min_u,
        identity_rhs,
    })
}

/// Step counts per region of the smoothed metric.
const BALL_STEPS: usize = 400;
const BAND_STEPS: usize = 100;
const COLLAR_STEPS: usize = 4000;

impl<'a> RadialProblem<'a> {
    /// The conformal problem for `f` on the smoothed glued metric.
    pub fn from_aux(aux: &'a ScalarAux) -> Self {
        use crate::smooth::Region;
        let sm: &'a SmoothedMetric = &aux.metric;
        let pieces = sm
            .segments()
            .into_iter()
            .map(|seg| {
                let steps = match seg.region {
                    Region::Ball => BALL_STEPS,
                    Region::Collar => COLLAR_STEPS,
                    _ => BAND_STEPS,
                };
                Piece {
                    start: seg.start,
                    end: seg.end,
                    psi: Box::new(move |x| sm.profile(seg.region, x)[0]),
                    source: Box::new(move |x| aux.value(seg.region, x)),
                    steps,
                }
            })
            .collect();
        RadialProblem {
            pieces,
            outer: sm.base.outer,
            r_switch: sm.switch_radius(),
            outer_source: Box::new(move |r| aux.outer_value(r)),
            scale: sm.sigma(),
        }
    }
}

pub fn solve_conformal(aux: &ScalarAux, opts: &ConformalOptions) -> Result<ConformalSolution> {
    solve_radial(&RadialProblem::from_aux(aux), opts)
}

/// Masses before and after the conformal change.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassComparison {
    pub m_before: f64,
    /// `m_before + 2A`.
    pub m_after: f64,
    pub ratio: f64,
    /// `1 - ratio`.
    pub epsilon0: f64,
    /// ADM mass of `u^4 g` from flux integrals.
    pub direct: MassReport,
    /// `|direct - m_after| / |m_before|`.
    pub discrepancy: f64,
    /// True when the two evaluations differ by more than 1%.
    pub inconsistent: bool,
}

/// `m(u^4 g) = m(g) + 2A`, cross-checked by the ADM flux of `(u Phi)^4 delta`.
pub fn mass_shift(sol: &ConformalSolution, m_before: f64) -> Result<MassComparison> {
    let metric = sol
        .metric
        .ok_or_else(|| Error::InvalidInput("solution carries no outer metric".into()))?;
    let m_after = m_before + 2.0 * sol.a;
    let r_lo = sol.outer.first().unwrap().r;
    let r_hi = sol.outer.last().unwrap().r;
    let chart = ConformallyFlatChart {
        factor: |r: f64| {
            let (u, du) = sol.outer_at(r);
            let (p, pd, _) = metric.phi_derivs(r);
            (u * p, du * p + u * pd)
        },
        inner: r_lo,
    };
    let radii: Vec<f64> = [0.1, 0.2, 0.4, 0.8]
        .iter()
        .map(|k| k * r_hi)
        .filter(|&r| r > r_lo)
        .collect();
    let direct = adm_mass(&chart, &radii)?;
    let scale = m_before.abs().max(1e-300);
    let discrepancy = (direct.extrapolated - m_after).abs() / scale;
    let ratio = m_after / m_before;
    Ok(MassComparison {
        m_before,
        m_after,
        ratio,
        epsilon0: 1.0 - ratio,
        direct,
        discrepancy,
        inconsistent: discrepancy > 0.01,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupEstimateReport {
    pub sigmas: Vec<f64>,
    pub sups: Vec<f64>,
    pub fit: ExponentFit,
    /// Exponent `<= -1/2 + 0.2`, or degenerate (all zero).
    pub pass: bool,
}

/// Fits `sup_{|x| >= sigma/2} |u - 1|` against sigma.
pub fn sup_estimate_check(solutions: &[(f64, &ConformalSolution)]) -> Result<SupEstimateReport> {
    if solutions.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "sup estimate needs at least 3 scales, got {}",
            solutions.len()
        )));
    }
    let sigmas: Vec<f64> = solutions.iter().map(|(s, _)| *s).collect();
    let sups: Vec<f64> = solutions
        .iter()
        .map(|(s, sol)| sol.sup_deviation_beyond(s / 2.0))
        .collect();
    let fit = fit_exponent(&sigmas, &sups, 1e-300);
    let pass = match fit {
        ExponentFit::Fitted { exponent, .. } => exponent <= -0.5 + 0.2,
        ExponentFit::Degenerate => true,
    };
    Ok(SupEstimateReport {
        sigmas,
        sups,
        fit,
        pass,
    })
}
