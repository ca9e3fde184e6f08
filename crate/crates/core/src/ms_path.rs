//! The area-preserving conformal path from `exp(2u) sigma^2 g_*` to a round
//! sphere.
//!
//! Along `t in [0, sigma/2]` the explicit path is
//! `w~(t) = exp(2 w) sigma^2 g_*` with `w = u (1 - 2t/sigma) + a(t)`, where the
//! drift satisfies `a' = (2/sigma) avg_{w~(t)} u`. Its area form is corrected
//! by the flow of `X_t = grad psi` with `Lap_{w~(t)} psi = 4u/sigma - 2a'`,
//! and `w(t) = phi_t^* w~(t)` has constant pointwise area form.
//!
//! The drift, flow positions and the log-Jacobian of the flow are advanced
//! together with classical RK4. The velocity is interpolated bicubically in
//! Cartesian components.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::fit::{fit_exponent, ExponentFit};
use crate::s2::{
    average, gradient_and_hessian, round_gradient, round_gradient_of, solve_poisson_spectral,
    to_spherical, GradHess, LatLonTable, S2ConformalMetric, S2Field, SpectralCoeffs, SphereGrid,
};
use crate::{Error, Result};

/// Minimum number of time steps accepted by [`build_path`].
pub const MIN_STEPS: usize = 16;

/// Default step count `max(200, 4 sigma)`.
pub fn default_steps(sigma: f64) -> usize {
    (4.0 * sigma).ceil().max(200.0) as usize
}

/// Data shared by every time slice of one path: the boundary logfactor and
/// its round gradient.
#[derive(Debug, Clone)]
pub struct PathContext {
    pub u: S2Field,
    pub sigma: f64,
    u_grad: (Vec<f64>, Vec<f64>),
}

impl PathContext {
    pub fn new(u: &S2Field, sigma: f64) -> Self {
        Self {
            u: u.clone(),
            sigma,
            u_grad: round_gradient(u),
        }
    }
}

/// Fields of the explicit path at one time.
#[derive(Debug, Clone)]
pub struct PathFields {
    pub t: f64,
    pub a: f64,
    pub a_prime: f64,
    /// Logfactor `w = u (1 - 2t/sigma) + a`.
    pub metric: S2ConformalMetric,
    pub psi: S2Field,
    psi_coeffs: SpectralCoeffs,
}

impl PathFields {
    /// Solves for `a'` and `psi` at time `t` with drift value `a`.
    pub fn new(u: &S2Field, sigma: f64, t: f64, a: f64) -> Result<Self> {
        Self::solve(&PathContext::new(u, sigma), t, a)
    }

    pub fn solve(ctx: &PathContext, t: f64, a: f64) -> Result<Self> {
        let (u, sigma) = (&ctx.u, ctx.sigma);
        let s = 1.0 - 2.0 * t / sigma;
        let metric = S2ConformalMetric::new(sigma, u.map(|v| v * s + a))?;
        let a_prime = 2.0 / sigma * average(u, &metric)?;
        let mut rhs = u.map(|v| 4.0 * v / sigma - 2.0 * a_prime);
        // Constant u cancels exactly up to rounding.
        if rhs.max_abs() <= 1e-13 * (4.0 * u.max_abs() / sigma) {
            rhs = S2Field::zeros(u.grid());
        }
        let (psi, psi_coeffs) = solve_poisson_spectral(&rhs, &metric)?;
        Ok(Self {
            t,
            a,
            a_prime,
            metric,
            psi,
            psi_coeffs,
        })
    }

    pub fn hessian(&self) -> Result<GradHess> {
        gradient_and_hessian(&self.psi, &self.metric)
    }

    /// Cartesian components of `X = grad psi` and its round divergence
    /// `div_* X = exp(-2w) sigma^-2 (Lap_* psi - 2 <dw, dpsi>)`.
    fn velocity(&self, ctx: &PathContext) -> Velocity {
        let grid = self.psi.grid().clone();
        let (pt, pp) = round_gradient_of(&grid, &self.psi_coeffs);
        let s = 1.0 - 2.0 * self.t / ctx.sigma;
        let (ut, up) = (&ctx.u_grad.0, &ctx.u_grad.1);
        let lap = grid.synthesize(&self.psi_coeffs.scale_by_degree(|l| -((l * (l + 1)) as f64)));
        let s2 = self.metric.sigma * self.metric.sigma;
        let n = grid.len();
        let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut div = vec![0.0; n];
        let nphi = grid.n_phi();
        for i in 0..grid.n_theta() {
            let (ct, st) = (grid.cos_theta()[i], grid.sin_theta()[i]);
            for j in 0..nphi {
                let k = i * nphi + j;
                let (sp, cp) = grid.phi()[j].sin_cos();
                let scale = (-2.0 * self.metric.logfactor.values()[k]).exp() / s2;
                let (vt, vp) = (scale * pt[k], scale * pp[k]);
                comps[0][k] = vt * ct * cp - vp * sp;
                comps[1][k] = vt * ct * sp + vp * cp;
                comps[2][k] = -vt * st;
                div[k] = scale * (lap[k] - 2.0 * s * (ut[k] * pt[k] + up[k] * pp[k]));
            }
        }
        Velocity { grid, comps, div }
    }
}

/// Velocity field sampled on the grid, ready for interpolation.
struct Velocity {
    grid: Arc<SphereGrid>,
    comps: [Vec<f64>; 3],
    div: Vec<f64>,
}

impl Velocity {
    /// Tangential velocity and divergence at a (not necessarily unit) point.
    fn at(&self, p: [f64; 3]) -> ([f64; 3], f64) {
        let (t, ph) = to_spherical(p);
        let st = self.grid.stencil(t, ph);
        let v = [
            st.apply(&self.comps[0]),
            st.apply(&self.comps[1]),
            st.apply(&self.comps[2]),
        ];
        let n = norm(p);
        let q = [p[0] / n, p[1] / n, p[2] / n];
        let r = dot(v, q);
        (
            [v[0] - r * q[0], v[1] - r * q[1], v[2] - r * q[2]],
            st.apply(&self.div),
        )
    }
}

fn norm(p: [f64; 3]) -> f64 {
    dot(p, p).sqrt()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(p: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [p[0] + h * k[0], p[1] + h * k[1], p[2] + h * k[2]]
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = norm(p);
    [p[0] / n, p[1] / n, p[2] / n]
}

/// One RK4 step of `dp/dt = X(stage, p)` for points on the unit sphere.
/// `velocity(s, p)` is the field at stage `s` (times `t, t + dt/2, t + dt/2,
/// t + dt`). Results are renormalised onto the sphere.
pub fn flow_step<F>(positions: &[[f64; 3]], dt: f64, velocity: F) -> Vec<[f64; 3]>
where
    F: Fn(usize, [f64; 3]) -> [f64; 3],
{
    positions
        .iter()
        .map(|&p| {
            let k1 = velocity(0, p);
            let k2 = velocity(1, axpy(p, dt / 2.0, k1));
            let k3 = velocity(2, axpy(p, dt / 2.0, k2));
            let k4 = velocity(3, axpy(p, dt, k3));
            let mut q = p;
            for c in 0..3 {
                q[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            unit(q)
        })
        .collect()
}

/// Per-step scalars of the path.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub a: f64,
    pub a_prime: f64,
    pub psi_max: f64,
    /// `sup |Hess psi|` measured in `w~(t)`.
    pub psi_hessian_max: f64,
    /// `sup |tr_w w_dot|`.
    pub trace_max: f64,
    /// Total area of `w~(t)`.
    pub area: f64,
}

/// Flow state stored at selected steps.
#[derive(Debug, Clone)]
pub struct PathSnapshot {
    pub step: usize,
    pub t: f64,
    pub a: f64,
    /// Image of every grid node under the flow.
    pub positions: Vec<[f64; 3]>,
    /// Log-Jacobian of the flow integrated along trajectories.
    pub log_jacobian: Vec<f64>,
    pub psi: S2Field,
}

#[derive(Debug, Clone)]
pub struct MetricPath {
    pub sigma: f64,
    pub u: S2Field,
    pub times: Vec<f64>,
    /// `a(t_i)` and `a'(t_i)` at every step node.
    pub drift: Vec<f64>,
    pub drift_rate: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<PathSnapshot>,
    pub warnings: Vec<String>,
    /// `u` resampled on a finer grid for evaluation at flowed points.
    u_table: OnceLock<LatLonTable>,
}

/// Pointwise area diagnostics of a snapshot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AreaCheck {
    pub t: f64,
    /// `max |dA_{w(t)} / dA_{w(0)} - 1|` with the Jacobian from spectral
    /// derivatives of the flow map.
    pub deviation: f64,
    /// Same, with the Jacobian from the integrated divergence.
    pub deviation_liouville: f64,
}

/// CSV row exported per snapshot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub area_deviation: f64,
    pub psi_max: f64,
    pub a_prime_abs: f64,
    pub endpoint_oscillation: f64,
}

/// Builds the path with the default snapshot stride (about 20 snapshots).
pub fn build_path(u: &S2Field, sigma: f64, steps: usize) -> Result<MetricPath> {
    build_path_with_stride(u, sigma, steps, (steps / 20).max(1))
}

pub fn build_path_with_stride(
    u: &S2Field,
    sigma: f64,
    steps: usize,
    stride: usize,
) -> Result<MetricPath> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_STEPS} steps, got {steps}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {sigma}"
        )));
    }
    let stride = stride.max(1);
    let mut warnings = Vec::new();
    if u.max_abs() > 1.0 {
        warnings.push(format!(
            "sup|u| = {} exceeds 1; exp(2u) may be under-resolved",
            u.max_abs()
        ));
    }
    let grid = u.grid().clone();
    let dt = sigma / 2.0 / steps as f64;
    let ctx = PathContext::new(u, sigma);
    let at = |step: usize, t: f64, a: f64| {
        PathFields::solve(&ctx, t, a).map_err(|e| Error::PathStep {
            step,
            source: Box::new(e),
        })
    };

    let mut positions: Vec<[f64; 3]> = (0..grid.n_theta())
        .flat_map(|i| (0..grid.n_phi()).map(move |j| (i, j)))
        .map(|(i, j)| grid.point(i, j))
        .collect();
    let mut log_j = vec![0.0; grid.len()];
    let mut a = 0.0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut drift = Vec::with_capacity(steps + 1);
    let mut drift_rate = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();

    let mut f1 = at(0, 0.0, 0.0)?;
    for step in 0..=steps {
        let t = step as f64 * dt;
        times.push(t);
        drift.push(a);
        drift_rate.push(f1.a_prime);
        records.push(record(&f1, u).map_err(|e| Error::PathStep {
            step,
            source: Box::new(e),
        })?);
        if step % stride == 0 || step == steps {
            snapshots.push(PathSnapshot {
                step,
                t,
                a,
                positions: positions.clone(),
                log_jacobian: log_j.clone(),
                psi: f1.psi.clone(),
            });
        }
        if step == steps {
            break;
        }
        let f2 = at(step, t + dt / 2.0, a + dt / 2.0 * f1.a_prime)?;
        let f3 = at(step, t + dt / 2.0, a + dt / 2.0 * f2.a_prime)?;
        let f4 = at(step, t + dt, a + dt * f3.a_prime)?;
        let vel = [
            f1.velocity(&ctx),
            f2.velocity(&ctx),
            f3.velocity(&ctx),
            f4.velocity(&ctx),
        ];
        for (p, lj) in positions.iter_mut().zip(log_j.iter_mut()) {
            let (k1, d1) = vel[0].at(*p);
            let (k2, d2) = vel[1].at(axpy(*p, dt / 2.0, k1));
            let (k3, d3) = vel[2].at(axpy(*p, dt / 2.0, k2));
            let (k4, d4) = vel[3].at(axpy(*p, dt, k3));
            let mut q = *p;
            for c in 0..3 {
                q[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            *p = unit(q);
            *lj += dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
        }
        a += dt / 6.0 * (f1.a_prime + 2.0 * f2.a_prime + 2.0 * f3.a_prime + f4.a_prime);
        f1 = at(step + 1, t + dt, a)?;
    }

    Ok(MetricPath {
        sigma,
        u: u.clone(),
        times,
        drift,
        drift_rate,
        records,
        snapshots,
        warnings,
        u_table: OnceLock::new(),
    })
}

fn record(f: &PathFields, u: &S2Field) -> Result<StepRecord> {
    let gh = f.hessian()?;
    let wd = f.omega_dot_from(u, &gh);
    let hmax = (0..gh.len())
        .map(|k| gh.hessian_norm(k))
        .fold(0.0, f64::max);
    Ok(StepRecord {
        t: f.t,
        a: f.a,
        a_prime: f.a_prime,
        psi_max: f.psi.max_abs(),
        psi_hessian_max: hmax,
        trace_max: wd.trace.iter().fold(0.0, |m, v| m.max(v.abs())),
        area: f.metric.area(),
    })
}

/// `w_dot` pushed forward to the explicit path, sampled on the grid.
#[derive(Debug, Clone)]
pub struct OmegaDot {
    /// `|w_dot|^2` measured in `w~(t)`.
    pub norm_sq: Vec<f64>,
    /// `tr_{w~} w_dot`.
    pub trace: Vec<f64>,
}

impl PathFields {
    /// `w_dot = exp(2w) sigma^2 (2a' - 4u/sigma) g_* + 2 Hess psi`, the
    /// derivative of `phi_t^* w~(t)` pushed forward by `phi_t`.
    pub fn omega_dot(&self, u: &S2Field) -> Result<OmegaDot> {
        Ok(self.omega_dot_from(u, &self.hessian()?))
    }

    fn omega_dot_from(&self, u: &S2Field, gh: &GradHess) -> OmegaDot {
        let sigma = self.metric.sigma;
        let n = gh.len();
        let mut norm_sq = vec![0.0; n];
        let mut trace = vec![0.0; n];
        for k in 0..n {
            let s = gh.inv_scale[k];
            // In the round frame the conformal part is c * identity.
            let c = (2.0 * self.a_prime - 4.0 * u.values()[k] / sigma) / s;
            let tt = c + 2.0 * gh.h_tt[k];
            let pp = c + 2.0 * gh.h_pp[k];
            let tp = 2.0 * gh.h_tp[k];
            norm_sq[k] = s * s * (tt * tt + 2.0 * tp * tp + pp * pp);
            trace[k] = s * (tt + pp);
        }
        OmegaDot { norm_sq, trace }
    }
}

impl MetricPath {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.u.grid()
    }

    /// Drift `a(t)` by cubic Hermite interpolation of the stored nodes.
    pub fn drift_at(&self, t: f64) -> f64 {
        let n = self.steps();
        let dt = self.times[1] - self.times[0];
        let x = (t / dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let s = x - i as f64;
        let (p0, p1) = (self.drift[i], self.drift[i + 1]);
        let (m0, m1) = (self.drift_rate[i] * dt, self.drift_rate[i + 1] * dt);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }

    /// Fields of the explicit path at an arbitrary time.
    pub fn fields_at(&self, t: f64) -> Result<PathFields> {
        if !(0.0..=self.sigma / 2.0 + 1e-12).contains(&t) {
            return Err(Error::OutOfRange {
                value: t,
                min: 0.0,
                max: self.sigma / 2.0,
            });
        }
        PathFields::new(&self.u, self.sigma, t, self.drift_at(t))
    }

    /// Area-form check at a snapshot.
    pub fn area_check(&self, snap: &PathSnapshot) -> AreaCheck {
        let grid = self.grid();
        let table = self
            .u_table
            .get_or_init(|| LatLonTable::from_coeffs(&self.u.coeffs(), 4 * grid.n_theta()));
        let s = 1.0 - 2.0 * snap.t / self.sigma;
        let jac = flow_jacobian(grid, &snap.positions);
        let mut dev: f64 = 0.0;
        let mut dev_l: f64 = 0.0;
        for (k, p) in snap.positions.iter().enumerate() {
            let w = table.sample_at(*p) * s + snap.a;
            let u0 = self.u.values()[k];
            let base: f64 = 2.0 * (w - u0);
            dev = dev.max((base.exp() * jac[k] - 1.0).abs());
            dev_l = dev_l.max((base + snap.log_jacobian[k]).exp_m1().abs());
        }
        AreaCheck {
            t: snap.t,
            deviation: dev,
            deviation_liouville: dev_l,
        }
    }

    /// Largest area deviation over all snapshots.
    pub fn max_area_deviation(&self) -> AreaCheck {
        let checks: Vec<AreaCheck> = self.snapshots.iter().map(|s| self.area_check(s)).collect();
        AreaCheck {
            t: self.sigma / 2.0,
            deviation: checks.iter().map(|c| c.deviation).fold(0.0, f64::max),
            deviation_liouville: checks
                .iter()
                .map(|c| c.deviation_liouville)
                .fold(0.0, f64::max),
        }
    }

    /// Oscillation of the logfactor of `w~(sigma/2)`, which should be round.
    pub fn endpoint_oscillation(&self) -> f64 {
        let a = *self.drift.last().unwrap();
        self.u
            .map(|v| v * (1.0 - 2.0 * self.times.last().unwrap() / self.sigma) + a)
            .oscillation()
    }

    /// Relative spread of the total area of `w~(t)` along the path.
    pub fn area_drift(&self) -> f64 {
        let a0 = self.records[0].area;
        self.records
            .iter()
            .map(|r| (r.area / a0 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_a_prime(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.a_prime.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_psi_hessian(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.psi_hessian_max)
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<PathRow> {
        let osc = self.endpoint_oscillation();
        self.snapshots
            .iter()
            .map(|s| {
                let r = &self.records[s.step];
                PathRow {
                    t: s.t,
                    area_deviation: self.area_check(s).deviation,
                    psi_max: r.psi_max,
                    a_prime_abs: r.a_prime.abs(),
                    endpoint_oscillation: osc,
                }
            })
            .collect()
    }
}

/// Jacobian of a map of the sphere, sampled at the grid nodes, relative to
/// the round area form: `(Phi_theta x Phi_phi / sin) . Phi`.
pub fn flow_jacobian(grid: &Arc<SphereGrid>, positions: &[[f64; 3]]) -> Vec<f64> {
    let comp =
        |c: usize| S2Field::new(grid.clone(), positions.iter().map(|p| p[c]).collect()).unwrap();
    let d: Vec<(Vec<f64>, Vec<f64>)> = (0..3).map(|c| round_gradient(&comp(c))).collect();
    positions
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let a = [d[0].0[k], d[1].0[k], d[2].0[k]];
            let b = [d[0].1[k], d[1].1[k], d[2].1[k]];
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            dot(c, *p)
        })
        .collect()
}

/// Fitted exponents of `max_t |Hess psi|` and `max_t |a'|` against sigma.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub sigmas: Vec<f64>,
    pub psi_norms: Vec<f64>,
    pub a_prime_max: Vec<f64>,
    pub psi_exponent: ExponentFit,
    pub a_prime_exponent: ExponentFit,
}

/// Builds one path per sigma from `u_family(sigma)` and fits the decay of
/// the potential and of the drift rate.
pub fn path_scaling_study<F>(
    u_family: F,
    sigmas: &[f64],
    steps: Option<usize>,
) -> Result<ScalingReport>
where
    F: Fn(f64) -> S2Field,
{
    if sigmas.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "scaling study needs at least 3 scales, got {}",
            sigmas.len()
        )));
    }
    let mut psi_norms = Vec::new();
    let mut a_prime_max = Vec::new();
    for &sigma in sigmas {
        let u = u_family(sigma);
        let k = steps.unwrap_or_else(|| default_steps(sigma));
        let path = build_path_with_stride(&u, sigma, k, k)?;
        psi_norms.push(path.max_psi_hessian());
        a_prime_max.push(path.max_a_prime());
    }
    Ok(ScalingReport {
        sigmas: sigmas.to_vec(),
        psi_exponent: fit_exponent(sigmas, &psi_norms, 1e-14),
        a_prime_exponent: fit_exponent(sigmas, &a_prime_max, 1e-14),
        psi_norms,
        a_prime_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotate_z(p: [f64; 3], angle: f64) -> [f64; 3] {
        let (s, c) = angle.sin_cos();
        [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
    }

    #[test]
    fn zero_field_gives_trivial_path() {
        let grid = SphereGrid::new(8);
        let path = build_path(&S2Field::zeros(&grid), 10.0, 16).unwrap();
        assert!(path.drift.iter().all(|a| a.abs() < 1e-15));
        assert!(path.records.iter().all(|r| r.psi_max < 1e-14));
        let last = path.snapshots.last().unwrap();
        for (k, p) in last.positions.iter().enumerate() {
            let q = grid.point(k / grid.n_phi(), k % grid.n_phi());
            assert!(dot(*p, q) > 1.0 - 1e-14);
        }
    }

    #[test]
    fn constant_field_drifts_linearly() {
        let grid = SphereGrid::new(8);
        let (c, sigma) = (0.3, 20.0);
        let path = build_path(&S2Field::constant(&grid, c), sigma, 16).unwrap();
        for (t, a) in path.times.iter().zip(&path.drift) {
            assert!((a - 2.0 * c * t / sigma).abs() < 1e-13, "{t}: {a}");
        }
        assert!(path.records.iter().all(|r| r.psi_max < 1e-13));
        assert!(path.endpoint_oscillation() < 1e-13);
        assert!(path.max_area_deviation().deviation < 1e-12);
    }

    #[test]
    fn flow_step_rotates_about_z() {
        let field = |_: usize, p: [f64; 3]| [-p[1], p[0], 0.0];
        let pts = vec![[1.0, 0.0, 0.0], [0.6, 0.0, 0.8], [0.0, 0.6, -0.8]];
        let unchanged = flow_step(&pts, 0.3, |_, _| [0.0; 3]);
        assert_eq!(unchanged, pts);
        let dt = std::f64::consts::FRAC_PI_2 / 64.0;
        let mut q = pts.clone();
        for _ in 0..64 {
            q = flow_step(&q, dt, field);
        }
        for (a, b) in q.iter().zip(&pts) {
            let exact = rotate_z(*b, std::f64::consts::FRAC_PI_2);
            let err = (0..3).map(|c| (a[c] - exact[c]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn flow_step_is_fourth_order() {
        // A time-independent, non-rigid tangent field.
        let field = |_: usize, p: [f64; 3]| {
            let v = [0.3 * p[2], 0.2, -0.3 * p[0] + 0.1 * p[1]];
            let r = dot(v, p);
            [v[0] - r * p[0], v[1] - r * p[1], v[2] - r * p[2]]
        };
        let p0 = vec![unit([0.3, -0.5, 0.8])];
        let err = |dt: f64| {
            let full = flow_step(&p0, dt, field);
            let half = flow_step(&flow_step(&p0, dt / 2.0, field), dt / 2.0, field);
            (0..3)
                .map(|c| (full[0][c] - half[0][c]).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.2) / err(0.1);
        assert!((ratio.log2() - 5.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn too_few_steps_rejected() {
        let grid = SphereGrid::new(8);
        assert!(matches!(
            build_path(&S2Field::zeros(&grid), 10.0, 8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn small_perturbation_keeps_area_form() {
        let grid = SphereGrid::new(16);
        let u = S2Field::from_fn(&grid, |t, _| 0.05 * t.cos());
        let path = build_path(&u, 16.0, 32).unwrap();
        assert!(path.max_area_deviation().deviation < 1e-3);
        assert!(path.endpoint_oscillation() < 1e-12);
        assert!(path.area_drift() < 1e-12);
        assert!(path.records.iter().all(|r| r.trace_max < 1e-9));
    }

    #[test]
    fn scaling_study_zero_family_is_degenerate() {
        let grid = SphereGrid::new(8);
        let rep =
            path_scaling_study(|_| S2Field::zeros(&grid), &[8.0, 16.0, 32.0], Some(16)).unwrap();
        assert_eq!(rep.psi_exponent, ExponentFit::Degenerate);
        assert_eq!(rep.a_prime_exponent, ExponentFit::Degenerate);
        assert!(path_scaling_study(|_| S2Field::zeros(&grid), &[8.0, 16.0], Some(16)).is_err());
    }
}
