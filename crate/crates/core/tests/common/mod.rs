//! Test-side oracles, written independently of the library algorithms.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat3 = [[f64; 3]; 3];

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

pub fn integrate(rule: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 0.5 * (b - a);
    rule.iter()
        .map(|&(x, w)| w * f(a + h * (x + 1.0)))
        .sum::<f64>()
        * h
}

pub fn inverse3(g: &Mat3) -> Mat3 {
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (g[a][c] * g[b][d] - g[a][d] * g[b][c]) / det;
        }
    }
    inv
}

fn shifted(x: [f64; 3], k: usize, h: f64) -> [f64; 3] {
    let mut y = x;
    y[k] += h;
    y
}

/// Christoffel symbols `Gamma^k_ij` from central differences of the metric.
fn christoffel(g: &dyn Fn([f64; 3]) -> Mat3, x: [f64; 3], h: f64) -> [Mat3; 3] {
    let mut dg = [[[0.0; 3]; 3]; 3];
    for (l, dgl) in dg.iter_mut().enumerate() {
        let gp = g(shifted(x, l, h));
        let gm = g(shifted(x, l, -h));
        for i in 0..3 {
            for j in 0..3 {
                dgl[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
            }
        }
    }
    let ginv = inverse3(&g(x));
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for (k, gk) in gamma.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                gk[i][j] = (0..3)
                    .map(|l| 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                    .sum();
            }
        }
    }
    gamma
}

/// Scalar curvature of a 3-metric in coordinates by nested central differences.
pub fn scalar_curvature_fd(g: &dyn Fn([f64; 3]) -> Mat3, x: [f64; 3], h: f64) -> f64 {
    let gamma = christoffel(g, x, h);
    let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
    for (m, dm) in dgamma.iter_mut().enumerate() {
        let gp = christoffel(g, shifted(x, m, h), h);
        let gm = christoffel(g, shifted(x, m, -h), h);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    dm[k][i][j] = (gp[k][i][j] - gm[k][i][j]) / (2.0 * h);
                }
            }
        }
    }
    let ginv = inverse3(&g(x));
    let mut r = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut ric = 0.0;
            for k in 0..3 {
                ric += dgamma[k][k][i][j] - dgamma[j][k][i][k];
                for l in 0..3 {
                    ric += gamma[k][k][l] * gamma[l][i][j] - gamma[k][j][l] * gamma[l][i][k];
                }
            }
            r += ginv[i][j] * ric;
        }
    }
    r
}

/// Axisymmetric collar over the area-preserving path, in Eulerian
/// coordinates `(theta, phi, t)`:
/// `f e^{2w} sigma^2 [(d theta - X dt)^2 + sin^2 theta d phi^2] + dt^2`,
/// with `w = (1 - 2t/sigma) u + a(t)` and `X` the theta-component of the
/// generating gradient field.
pub struct AxiCollar<U: Fn(f64) -> f64> {
    pub u: U,
    pub sigma: f64,
    rule: Vec<(f64, f64)>,
}

impl<U: Fn(f64) -> f64> AxiCollar<U> {
    pub fn new(u: U, sigma: f64) -> Self {
        Self {
            u,
            sigma,
            rule: gauss_legendre(48),
        }
    }

    fn logfactor_no_drift(&self, theta: f64, t: f64) -> f64 {
        (1.0 - 2.0 * t / self.sigma) * (self.u)(theta)
    }

    /// `a'(t) = (2/sigma) * area-weighted mean of u`; the drift itself cancels.
    pub fn drift_rate(&self, t: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(x, w) in &self.rule {
            let th = x.acos();
            let e = (2.0 * self.logfactor_no_drift(th, t)).exp();
            num += w * e * (self.u)(th);
            den += w * e;
        }
        2.0 / self.sigma * num / den
    }

    pub fn drift(&self, t: f64) -> f64 {
        // Composite rule keeps the drift at rounding level for smooth u.
        let panels = 8;
        let h = t / panels as f64;
        (0..panels)
            .map(|k| {
                integrate(&self.rule, k as f64 * h, (k + 1) as f64 * h, |s| {
                    self.drift_rate(s)
                })
            })
            .sum()
    }

    /// `(w, X^theta)` at `(theta, t)` given the drift and its rate.
    fn w_and_x(&self, theta: f64, t: f64, a: f64, ap: f64) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let w = |th: f64| self.logfactor_no_drift(th, t) + a;
        // Lap_* psi = e^{2w} sigma^2 (4u/sigma - 2a') integrates to
        // sin(theta) psi_theta = int_0^theta S sin.
        let flux = integrate(&self.rule, 0.0, theta, |th| {
            (2.0 * w(th)).exp() * s2 * (4.0 * (self.u)(th) / self.sigma - 2.0 * ap) * th.sin()
        });
        let psi_theta = flux / theta.sin();
        let wv = w(theta);
        (wv, (-2.0 * wv).exp() / s2 * psi_theta)
    }

    /// Metric in `(theta, phi, t)` with the drift computed at each `t`.
    pub fn metric(&self, x: [f64; 3]) -> Mat3 {
        let [theta, _, t] = x;
        let a = self.drift(t);
        let ap = self.drift_rate(t);
        let (w, xt) = self.w_and_x(theta, t, a, ap);
        let f = (1.0 - t / self.sigma).powi(2);
        let big = f * (2.0 * w).exp() * self.sigma * self.sigma;
        let mut g = [[0.0; 3]; 3];
        g[0][0] = big;
        g[1][1] = big * theta.sin().powi(2);
        g[2][2] = 1.0 + big * xt * xt;
        g[0][2] = -big * xt;
        g[2][0] = -big * xt;
        g
    }

    /// Monte Carlo estimate of the collar volume and its standard error.
    pub fn volume_mc(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 * self.sigma;
        // The drift depends only on t, so tabulate it on a fine grid.
        let nt = 512;
        let table: Vec<f64> = (0..=nt)
            .map(|k| self.drift(half * k as f64 / nt as f64))
            .collect();
        let drift = |t: f64| {
            let x = t / half * nt as f64;
            let k = (x.floor() as usize).min(nt - 1);
            let s = x - k as f64;
            table[k] * (1.0 - s) + table[k + 1] * s
        };
        let box_volume = half * 2.0 * 2.0 * PI;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..samples {
            let t: f64 = rng.gen_range(0.0..half);
            let z: f64 = rng.gen_range(-1.0..1.0);
            let w = self.logfactor_no_drift(z.acos(), t) + drift(t);
            let f = (1.0 - t / self.sigma).powi(2);
            let v = f * (2.0 * w).exp() * self.sigma * self.sigma * box_volume;
            sum += v;
            sum2 += v * v;
        }
        let n = samples as f64;
        let mean = sum / n;
        (mean, ((sum2 / n - mean * mean) / n).sqrt())
    }
}

/// Axisymmetric Poisson problem `Lap_w psi = rhs` for `w = u(theta)` on the
/// sphere of radius `sigma`, discretised by second-order finite differences
/// in conservation form on `n` cells. The tridiagonal system is eliminated
/// from the north pole, where the flux vanishes. Returns the cell centres
/// and the solution normalised to zero mean in `dA_w`.
pub fn poisson_fd_axisymmetric(
    u: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
    sigma: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let h = PI / n as f64;
    let centres: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    let source: Vec<f64> = centres
        .iter()
        .map(|&th| (2.0 * u(th)).exp() * sigma * sigma * rhs(th))
        .collect();
    // s_{j+1/2} (psi_{j+1} - psi_j) / h = sum_{k<=j} S_k sin(theta_k) h
    let mut psi = vec![0.0; n];
    let mut flux = 0.0;
    for j in 0..n - 1 {
        flux += source[j] * centres[j].sin() * h;
        let edge = ((j + 1) as f64 * h).sin();
        psi[j + 1] = psi[j] + flux * h / edge;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let da = (2.0 * u(centres[j])).exp() * centres[j].sin();
        num += psi[j] * da;
        den += da;
    }
    let mean = num / den;
    (centres, psi.into_iter().map(|p| p - mean).collect())
}

/// Linear interpolation on a uniform cell-centred table.
pub fn sample_uniform(centres: &[f64], values: &[f64], x: f64) -> f64 {
    let h = centres[1] - centres[0];
    let s = (x - centres[0]) / h;
    let k = (s.floor().max(0.0) as usize).min(centres.len() - 2);
    let f = s - k as f64;
    values[k] * (1.0 - f) + values[k + 1] * f
}

/// Radial scalar curvature of `ds^2 + psi(s)^2 g_*` from a profile closure,
/// by central differences of `psi`.
pub fn radial_curvature_fd(psi: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    let p = psi(s);
    let d1 = (psi(s + h) - psi(s - h)) / (2.0 * h);
    let d2 = (psi(s + h) - 2.0 * p + psi(s - h)) / (h * h);
    2.0 * (1.0 - d1 * d1) / (p * p) - 4.0 * d2 / p
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * f(a) + inner + 0.5 * f(b))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Second-order finite-difference solve of `(r^2 u')' = f r^2 u` on
/// `[0, r_max]` with `u'(0) = 0` and the Robin end condition
/// `u' + (u - 1)/r = 0`, by the Thomas algorithm. Returns `(r_i, u_i)`.
pub fn conformal_fd_flat(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = r_max / n as f64;
    let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let (mut a, mut b, mut c, mut d) = (
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
    );
    // Centre cell [0, h/2]: flux (h/2)^2 (u1 - u0)/h = f0 u0 (h/2)^3 / 3.
    b[0] = -(h / 2.0).powi(2) / h - f(0.0) * (h / 2.0).powi(3) / 3.0;
    c[0] = (h / 2.0).powi(2) / h;
    for i in 1..n {
        let (rm, rp) = (r[i] - h / 2.0, r[i] + h / 2.0);
        a[i] = rm * rm / (h * h);
        c[i] = rp * rp / (h * h);
        b[i] = -a[i] - c[i] - f(r[i]) * r[i] * r[i];
    }
    // Ghost node from the Robin condition: u_{n+1} = u_{n-1} - 2h (u_n - 1)/R.
    let (rm, rp) = (r_max - h / 2.0, r_max + h / 2.0);
    let (am, cp) = (rm * rm / (h * h), rp * rp / (h * h));
    a[n] = am + cp;
    b[n] = -am - cp - f(r_max) * r_max * r_max - cp * 2.0 * h / r_max;
    d[n] = -cp * 2.0 * h / r_max;
    // Forward sweep.
    for i in 1..=n {
        let w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    let mut u = vec![0.0; n + 1];
    u[n] = d[n] / b[n];
    for i in (0..n).rev() {
        u[i] = (d[i] - c[i] * u[i + 1]) / b[i];
    }
    (r, u)
}
