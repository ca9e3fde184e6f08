//! Smoothing of the glued metric across both corners, in the spherically
//! symmetric reduction `ds^2 + psi(s)^2 g_*`.
//!
//! Along the radial geodesic coordinate `s` the glued metric is the flat
//! ball `psi = s` up to the fill radius, the collar `psi = R_sigma (1/2 +
//! (s - s_o)/sigma)` (linear, since `f = (1 - t/sigma)^2`), and the outer
//! metric beyond the leaf. At a corner `psi` is continuous and `psi'` jumps.
//!
//! Near each corner we work in a local offset `x = s - s_corner` so that
//! bands of width `delta^2` stay resolved in double precision. The
//! derivative `psi'` is mollified at scale `delta^2`; the constant offset
//! this leaves on the outer side is removed by a quintic blend over
//! `delta^2 < x < delta`, so the result equals the glued metric for
//! `|x| >= delta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::collar::GluedMetric;
use crate::fit::{fit_exponent, ExponentFit};
use crate::quad::GaussLegendre;
use crate::radial::RadialAFMetric;
use crate::{Error, Result};

/// Smooth bump `phi` on `[-1, 1]`: identically 1 on `[-1/3, 1/3]`, zero
/// outside `[-2/3, 2/3]`, unit integral.
///
/// The transition on `1/3 < |x| < 2/3` is `tau(3|x| - 1)` with
/// `tau(y) = E(1 - y) / (E(1 - y) + E(y))`, `E(z) = exp(-1/z)`. Since
/// `tau(y) + tau(1 - y) = 1`, each transition contributes exactly `1/6`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mollifier;

fn bump_e(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-1.0 / z).exp()
    }
}

fn transition(y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    if y >= 1.0 {
        return 0.0;
    }
    let (a, b) = (bump_e(1.0 - y), bump_e(y));
    a / (a + b)
}

/// `int_0^y tau`.
fn transition_integral(y: f64) -> f64 {
    let y = y.clamp(0.0, 1.0);
    if y > 0.5 {
        // tau(z) = 1 - tau(1 - z)
        return 0.5 - ((1.0 - y) - transition_integral(1.0 - y));
    }
    if y == 0.0 {
        return 0.0;
    }
    GaussLegendre::new(20).integrate_composite(0.0, y, 8, transition)
}

impl Mollifier {
    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= 1.0 / 3.0 {
            1.0
        } else {
            transition(3.0 * a - 1.0)
        }
    }

    /// `int_{-1}^x phi`.
    pub fn cumulative(&self, x: f64) -> f64 {
        if x > 0.0 {
            return 1.0 - self.cumulative(-x);
        }
        let a = -x;
        if a >= 2.0 / 3.0 {
            0.0
        } else if a >= 1.0 / 3.0 {
            // int_{-2/3}^{x} phi = (1/3) int_{3a-1}^{1} tau
            (0.5 - transition_integral(3.0 * a - 1.0)) / 3.0
        } else {
            1.0 / 6.0 + (x + 1.0 / 3.0)
        }
    }
}

/// Quintic smoothstep with vanishing first and second derivatives at both
/// ends: `(S, S', S'')`.
fn smoothstep(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if y >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let y2 = y * y;
    (
        y2 * y * (10.0 - 15.0 * y + 6.0 * y2),
        30.0 * y2 * (1.0 - y) * (1.0 - y),
        60.0 * y * (1.0 - y) * (1.0 - 2.0 * y),
    )
}

/// One side of a corner, in local offset `x`:
/// `(psi(x) - psi(0), psi'(x), psi''(x))`, continued analytically across
/// the corner.
#[derive(Debug, Clone, Copy)]
pub enum Side {
    Linear {
        slope: f64,
    },
    /// The outer radial metric near the coordinate sphere `rho`.
    Outer {
        metric: RadialAFMetric,
        rho: f64,
    },
}

impl Side {
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match *self {
            Side::Linear { slope } => [slope * x, slope, 0.0],
            Side::Outer { metric, rho } => {
                let y = outer_offset(&metric, rho, x);
                let rule = GaussLegendre::new(8);
                let dpsi = rule.integrate(0.0, y, |z| {
                    let r = rho + z;
                    let (p, pd, _) = metric.phi_derivs(r);
                    p * p + 2.0 * r * p * pd
                });
                let r = rho + y;
                let (p, pd, pdd) = metric.phi_derivs(r);
                let d1 = 1.0 + 2.0 * r * pd / p;
                let d2 = (2.0 * pd / p + 2.0 * r * pdd / p - 2.0 * r * pd * pd / (p * p)) / (p * p);
                [dpsi, d1, d2]
            }
        }
    }
}

/// Coordinate offset `y` with `int_rho^{rho + y} Phi^2 = x` (Newton).
pub fn outer_offset(metric: &RadialAFMetric, rho: f64, x: f64) -> f64 {
    let rule = GaussLegendre::new(8);
    let phi2 = |z: f64| metric.phi(rho + z).powi(2);
    let mut y = x / phi2(0.0);
    for _ in 0..8 {
        let g = rule.integrate(0.0, y, phi2) - x;
        let step = g / phi2(y);
        y -= step;
        if step.abs() <= 1e-16 * y.abs() {
            break;
        }
    }
    y
}

/// Which piece of a smoothed corner a local offset falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Left,
    Spike,
    Blend,
    Right,
}

/// A corner smoothed at width `delta`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothCorner {
    /// `psi` at the corner.
    pub psi0: f64,
    pub delta: f64,
    pub left: Side,
    pub right: Side,
    /// Offset of the mollified profile from the right side past the spike.
    pub beta: f64,
}

impl SmoothCorner {
    pub fn new(psi0: f64, delta: f64, left: Side, right: Side) -> Self {
        let mut c = Self {
            psi0,
            delta,
            left,
            right,
            beta: 0.0,
        };
        let e = c.spike_width();
        let l = left.eval(e)[0];
        let r = right.eval(e)[0];
        c.beta = l - r + c.spike_integral(e);
        c
    }

    /// Half-width `delta^2` of the spike band.
    pub fn spike_width(&self) -> f64 {
        self.delta * self.delta
    }

    /// Jump `psi'_right - psi'_left` at the corner.
    pub fn slope_jump(&self) -> f64 {
        self.right.eval(0.0)[1] - self.left.eval(0.0)[1]
    }

    /// `int_{-e}^{x} (psi'_R - psi'_L) H(x'/e) dx'` with `H` the mollifier CDF.
    fn spike_integral(&self, x: f64) -> f64 {
        let e = self.spike_width();
        let x = x.min(e);
        if x <= -e {
            return 0.0;
        }
        GaussLegendre::new(24).integrate_composite(-e, x, 4, |z| {
            (self.right.eval(z)[1] - self.left.eval(z)[1]) * Mollifier.cumulative(z / e)
        })
    }

    fn piece(&self, x: f64) -> Piece {
        let e = self.spike_width();
        if x <= -e {
            Piece::Left
        } else if x < e {
            Piece::Spike
        } else if x < self.delta {
            Piece::Blend
        } else {
            Piece::Right
        }
    }

    fn eval_piece(&self, piece: Piece, x: f64) -> [f64; 3] {
        let e = self.spike_width();
        match piece {
            Piece::Left => self.left.eval(x),
            Piece::Right => self.right.eval(x),
            Piece::Spike => {
                let l = self.left.eval(x);
                let r = self.right.eval(x);
                let h = Mollifier.cumulative(x / e);
                let phi = Mollifier.value(x / e) / e;
                [
                    l[0] + self.spike_integral(x),
                    l[1] * (1.0 - h) + r[1] * h,
                    l[2] * (1.0 - h) + r[2] * h + (r[1] - l[1]) * phi,
                ]
            }
            Piece::Blend => {
                let r = self.right.eval(x);
                let w = self.delta - e;
                let (s, sd, sdd) = smoothstep((x - e) / w);
                [
                    r[0] + self.beta * (1.0 - s),
                    r[1] - self.beta * sd / w,
                    r[2] - self.beta * sdd / (w * w),
                ]
            }
        }
    }

    /// `(psi(x) - psi0, psi'(x), psi''(x))` of the smoothed profile.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        self.eval_piece(self.piece(x), x)
    }

    /// Unsmoothed profile: left side for `x < 0`, right side for `x >= 0`.
    pub fn eval_base(&self, x: f64) -> [f64; 3] {
        if x < 0.0 {
            self.left.eval(x)
        } else {
            self.right.eval(x)
        }
    }

    /// Scalar curvature `2 (1 - psi'^2) / psi^2 - 4 psi'' / psi`.
    pub fn scalar_curvature(&self, x: f64) -> f64 {
        let [d, d1, d2] = self.eval(x);
        radial_scalar_curvature(self.psi0 + d, d1, d2)
    }

    /// `int_{-delta^2}^{delta^2} R dx`.
    pub fn band_integral(&self) -> f64 {
        let e = self.spike_width();
        GaussLegendre::new(24).integrate_composite(-e, e, 16, |x| self.scalar_curvature(x))
    }

    /// Largest jump of `(psi, psi', psi'')` across the piece boundaries.
    pub fn edge_discontinuity(&self) -> f64 {
        let e = self.spike_width();
        let pairs = [
            (-e, Piece::Left, Piece::Spike),
            (e, Piece::Spike, Piece::Blend),
            (self.delta, Piece::Blend, Piece::Right),
        ];
        let mut worst: f64 = 0.0;
        for (x, a, b) in pairs {
            let (p, q) = (self.eval_piece(a, x), self.eval_piece(b, x));
            for k in 0..3 {
                let scale = p[k].abs().max(q[k].abs()).max(1.0);
                worst = worst.max((p[k] - q[k]).abs() / scale);
            }
        }
        worst
    }

    /// `max |psi_smoothed - psi_glued|` over `|x| < delta`.
    pub fn max_deviation(&self) -> f64 {
        let n = 400;
        (0..=n)
            .flat_map(|k| {
                let y = -1.0 + 2.0 * k as f64 / n as f64;
                [y * self.delta, y * self.spike_width()]
            })
            .map(|x| (self.eval(x)[0] - self.eval_base(x)[0]).abs())
            .fold(0.0, f64::max)
    }
}

/// Scalar curvature of `ds^2 + psi^2 g_*`.
pub fn radial_scalar_curvature(psi: f64, d1: f64, d2: f64) -> f64 {
    2.0 * (1.0 - d1 * d1) / (psi * psi) - 4.0 * d2 / psi
}

/// Which corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    /// `Sigma_sigma`, between the collar and the outer metric.
    Inner,
    /// `Sigma'_sigma`, between the fill ball and the collar.
    Outer,
}

/// The glued metric smoothed across both corners.
#[derive(Debug, Clone)]
pub struct SmoothedMetric {
    pub base: GluedMetric,
    pub delta: f64,
    pub mollifier: Mollifier,
    /// Fill-ball/collar corner at `s_o = R_sigma / 2`.
    pub outer_corner: SmoothCorner,
    /// Collar/outer-metric corner at `s_o + sigma/2`.
    pub inner_corner: SmoothCorner,
    /// Whether `delta <= sigma^-3`.
    pub in_regime: bool,
}

/// Largest admissible smoothing width for a glued metric.
pub fn delta_limit(glued: &GluedMetric) -> f64 {
    (glued.sigma() / 8.0).min(glued.fill_radius / 4.0)
}

pub fn smooth_corner(glued: &GluedMetric, delta: f64) -> Result<SmoothedMetric> {
    let limit = delta_limit(glued);
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "smoothing width must be positive, got {delta}"
        )));
    }
    if delta >= limit {
        return Err(Error::DeltaTooLarge { delta, limit });
    }
    let sigma = glued.sigma();
    let slope = glued.area_radius / sigma;
    let outer_corner = SmoothCorner::new(
        glued.fill_radius,
        delta,
        Side::Linear { slope: 1.0 },
        Side::Linear { slope },
    );
    let inner_corner = SmoothCorner::new(
        glued.area_radius,
        delta,
        Side::Linear { slope },
        Side::Outer {
            metric: glued.outer,
            rho: glued.leaf_radius,
        },
    );
    Ok(SmoothedMetric {
        base: glued.clone(),
        delta,
        mollifier: Mollifier,
        outer_corner,
        inner_corner,
        in_regime: delta <= sigma.powi(-3),
    })
}

/// A stretch of the radial coordinate in its local offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `x = s`, the fill ball up to the outer band.
    Ball,
    /// `x = s - s_o`, the band around `Sigma'`.
    OuterBand,
    /// `x = s - s_o`, the collar between the bands.
    Collar,
    /// `x = s - s_i`, the band around `Sigma`.
    InnerBand,
}

/// A segment `[start, end]` of one region, in its local coordinate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub region: Region,
    pub start: f64,
    pub end: f64,
}

impl SmoothedMetric {
    pub fn sigma(&self) -> f64 {
        self.base.sigma()
    }

    pub fn corner(&self, surface: Surface) -> &SmoothCorner {
        match surface {
            Surface::Inner => &self.inner_corner,
            Surface::Outer => &self.outer_corner,
        }
    }

    /// Mean-curvature jump `H_outside - H_inside` seen from the ball side:
    /// `2 (psi'_R - psi'_L) / psi` with the sign of the paper's table.
    pub fn mean_curvature_jump(&self, surface: Surface) -> f64 {
        let c = self.corner(surface);
        -2.0 * c.slope_jump() / c.psi0
    }

    /// The radial profile up to the end of the inner band, split at every
    /// band edge. Past it the outer metric is used in its own chart.
    pub fn segments(&self) -> Vec<Segment> {
        let d = self.delta;
        let e = d * d;
        let half = self.sigma() / 2.0;
        let band = |region| {
            [
                Segment {
                    region,
                    start: -d,
                    end: -e,
                },
                Segment {
                    region,
                    start: -e,
                    end: e,
                },
                Segment {
                    region,
                    start: e,
                    end: d,
                },
            ]
        };
        let mut out = vec![Segment {
            region: Region::Ball,
            start: 0.0,
            end: self.base.fill_radius - d,
        }];
        out.extend(band(Region::OuterBand));
        out.push(Segment {
            region: Region::Collar,
            start: d,
            end: half - d,
        });
        out.extend(band(Region::InnerBand));
        out
    }

    /// `(psi, psi', psi'')` at local coordinate `x` of `region`.
    pub fn profile(&self, region: Region, x: f64) -> [f64; 3] {
        match region {
            Region::Ball => [x, 1.0, 0.0],
            Region::OuterBand => {
                let [d, d1, d2] = self.outer_corner.eval(x);
                [self.outer_corner.psi0 + d, d1, d2]
            }
            Region::Collar => {
                let slope = self.base.area_radius / self.sigma();
                [self.outer_corner.psi0 + slope * x, slope, 0.0]
            }
            Region::InnerBand => {
                let [d, d1, d2] = self.inner_corner.eval(x);
                [self.inner_corner.psi0 + d, d1, d2]
            }
        }
    }

    pub fn scalar_curvature(&self, region: Region, x: f64) -> f64 {
        if region == Region::Ball {
            return 0.0;
        }
        let [p, d1, d2] = self.profile(region, x);
        radial_scalar_curvature(p, d1, d2)
    }

    /// Outer-chart radius where the radial profile hands over.
    pub fn switch_radius(&self) -> f64 {
        self.base.leaf_radius + outer_offset(&self.base.outer, self.base.leaf_radius, self.delta)
    }

    /// Scalar curvature at signed offset `t` from a corner.
    pub fn curvature_profile(&self, surface: Surface, t: f64) -> f64 {
        self.corner(surface).scalar_curvature(t)
    }

    /// `int R dt` over the spike band of a corner.
    pub fn band_integral(&self, surface: Surface) -> f64 {
        self.corner(surface).band_integral()
    }

    /// Band integral divided by the mean-curvature jump.
    pub fn spike_constant(&self) -> f64 {
        self.band_integral(Surface::Outer) / self.mean_curvature_jump(Surface::Outer)
    }

    /// `max |R| delta^2` over the outer spike band.
    pub fn spike_peak(&self) -> f64 {
        let e = self.outer_corner.spike_width();
        let n = 200;
        (0..=n)
            .map(|k| self.curvature_profile(Surface::Outer, e * (-1.0 + 2.0 * k as f64 / n as f64)))
            .fold(0.0, |m: f64, r| m.max(r.abs()))
            * e
    }

    pub fn max_deviation(&self) -> f64 {
        self.outer_corner
            .max_deviation()
            .max(self.inner_corner.max_deviation())
    }

    pub fn edge_discontinuity(&self) -> f64 {
        self.outer_corner
            .edge_discontinuity()
            .max(self.inner_corner.edge_discontinuity())
    }
}

/// `f = R/8`, clamped from above by `C_0` inside the outer band.
#[derive(Debug, Clone)]
pub struct ScalarAux {
    pub metric: SmoothedMetric,
    pub c0: f64,
}

pub fn build_scalar_aux(sm: &SmoothedMetric) -> ScalarAux {
    let d = sm.delta;
    let edges = [
        sm.scalar_curvature(Region::OuterBand, -d),
        sm.scalar_curvature(Region::OuterBand, d),
    ];
    let mut c0 = edges.iter().fold(1.0f64, |m, r| m.max((r / 8.0).abs()));
    // Keep -C0 <= f <= R/8 satisfiable: C0 must dominate the negative part.
    let e = d * d;
    let n = 400;
    for k in 0..=n {
        let y = -1.0 + 2.0 * k as f64 / n as f64;
        for x in [y * d, y * e] {
            c0 = c0.max(-sm.scalar_curvature(Region::OuterBand, x) / 8.0);
        }
    }
    ScalarAux {
        metric: sm.clone(),
        c0,
    }
}

impl ScalarAux {
    /// `f` at local coordinate `x` of `region`.
    pub fn value(&self, region: Region, x: f64) -> f64 {
        let r8 = self.metric.scalar_curvature(region, x) / 8.0;
        match region {
            Region::OuterBand => r8.min(self.c0),
            _ => r8,
        }
    }

    /// `f` in the outer chart.
    pub fn outer_value(&self, r: f64) -> f64 {
        self.metric.base.outer.scalar_curvature(r) / 8.0
    }

    /// `int |f|^p dV` over the whole manifold.
    pub fn lp_integral(&self, p: f64) -> f64 {
        let sm = &self.metric;
        let rule = GaussLegendre::new(16);
        let mut total = 0.0;
        for seg in sm.segments() {
            let panels = if seg.region == Region::Collar || seg.region == Region::Ball {
                64
            } else {
                16
            };
            total += rule.integrate_composite(seg.start, seg.end, panels, |x| {
                let psi = sm.profile(seg.region, x)[0];
                self.value(seg.region, x).abs().powf(p) * 4.0 * PI * psi * psi
            });
        }
        let outer = sm.base.outer;
        let r0 = sm.switch_radius();
        let r1 = r0 * 1e8;
        total += rule.integrate_composite(r0.ln(), r1.ln(), 200, |l| {
            let r = l.exp();
            let ph = outer.phi(r);
            (outer.scalar_curvature(r) / 8.0).abs().powf(p) * 4.0 * PI * r * r * ph.powi(6) * r
        });
        total
    }

    pub fn l32_integral(&self) -> f64 {
        self.lp_integral(1.5)
    }

    /// Whether the clamp cuts the spike, i.e. `f < R/8` somewhere.
    pub fn clamp_active(&self) -> bool {
        self.metric.scalar_curvature(Region::OuterBand, 0.0) / 8.0 > self.c0
    }
}

/// One line of the smoothing table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothRow {
    pub sigma: f64,
    pub delta: f64,
    pub band_integral: f64,
    pub jump: f64,
    pub spike_constant: f64,
    /// `max |R| delta^2` in the outer spike band.
    pub spike_peak: f64,
    pub f_l32: f64,
    pub c0: f64,
    pub in_regime: bool,
}

pub fn smooth_row(sm: &SmoothedMetric) -> SmoothRow {
    let aux = build_scalar_aux(sm);
    SmoothRow {
        sigma: sm.sigma(),
        delta: sm.delta,
        band_integral: sm.band_integral(Surface::Outer),
        jump: sm.mean_curvature_jump(Surface::Outer),
        spike_constant: sm.spike_constant(),
        spike_peak: sm.spike_peak(),
        f_l32: aux.l32_integral(),
        c0: aux.c0,
        in_regime: sm.in_regime,
    }
}

/// Decay of `int |f|^{3/2}` over a sweep of sigma with `delta(sigma)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxDecayReport {
    pub sigmas: Vec<f64>,
    pub integrals: Vec<f64>,
    pub fit: ExponentFit,
}

pub fn aux_decay_study<D: Fn(f64) -> f64>(
    outer: RadialAFMetric,
    sigmas: &[f64],
    delta: D,
) -> Result<AuxDecayReport> {
    if sigmas.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "decay study needs at least 3 scales, got {}",
            sigmas.len()
        )));
    }
    let mut integrals = Vec::new();
    for &s in sigmas {
        let glued = GluedMetric::new(outer, s)?;
        let sm = smooth_corner(&glued, delta(s))?;
        integrals.push(build_scalar_aux(&sm).l32_integral());
    }
    Ok(AuxDecayReport {
        sigmas: sigmas.to_vec(),
        fit: fit_exponent(sigmas, &integrals, 1e-300),
        integrals,
    })
}
