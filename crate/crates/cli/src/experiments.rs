//! One function per subcommand. Sweep points run on the rayon pool; results
//! are collected in sweep order, so output does not depend on thread count.
//!
//! CSV headers carry `name[measure;unit]`: `coord` is the Euclidean chart
//! measure, `metric` the Riemannian one; `L` is length in the units of m.

use anyhow::Result;
use rayon::prelude::*;
use serde_json::json;

use afiso_core::collar::{collar_decay_study, GluedMetric};
use afiso_core::conformal::{
    mass_shift, solve_conformal, sup_estimate_check, ConformalOptions, ConformalSolution,
};
use afiso_core::isoperimetric::TrialRegion;
use afiso_core::isoperimetric::{
    centering_integrals, centering_integrals_monte_carlo, centering_model, compare_with_centered,
    sharp_residual,
};
use afiso_core::mass::{
    adm_mass, centered_iso_mass, hawking_mass, hawking_mass_quadrature, quasilocal_iso_mass,
};
use afiso_core::ms_path::{build_path, path_scaling_study};
use afiso_core::s2::{S2Field, SphereGrid};
use afiso_core::smooth::{build_scalar_aux, smooth_corner, smooth_row, Surface};

use crate::config::{Family, HarmonicTerm, Scaling, ScenarioConfig};
use crate::record::Outputs;
use crate::row;

/// Unnormalised associated Legendre function, without the Condon-Shortley phase.
fn legendre(l: usize, m: usize, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut p1 = x * (2 * m + 1) as f64 * pmm;
    let mut p0 = pmm;
    for ll in m + 2..=l {
        let p = ((2 * ll - 1) as f64 * x * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
        p0 = p1;
        p1 = p;
    }
    p1
}

fn boundary_value(terms: &[HarmonicTerm], theta: f64, phi: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let p = legendre(t.l, t.m, theta.cos());
            let mp = t.m as f64 * phi;
            p * (t.cos * mp.cos() + t.sin * mp.sin())
        })
        .sum()
}

/// Boundary log-factor `u_sigma` on an `n x 2n` grid.
pub fn boundary_field(cfg: &ScenarioConfig, sigma: f64) -> S2Field {
    let grid = SphereGrid::new(cfg.resolution.n_theta);
    let scale = match cfg.boundary.scaling {
        Scaling::Fixed => 1.0,
        Scaling::Decay => sigma.powf(-cfg.metric.tau),
    };
    let terms = &cfg.boundary.term;
    S2Field::from_fn(&grid, |th, ph| scale * boundary_value(terms, th, ph))
}

fn options(cfg: &ScenarioConfig) -> ConformalOptions {
    ConformalOptions {
        outer_steps: cfg.resolution.outer_steps,
        refine: cfg.resolution.refine,
        ..Default::default()
    }
}

fn min_max(v: impl IntoIterator<Item = f64>) -> (f64, f64) {
    v.into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        })
}

pub fn mass(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let g = cfg.metric()?;
    let m = cfg.mass();
    let tol = &cfg.tolerances;
    let report = adm_mass(&g, &cfg.adm_radii())?;
    let exact = g.adm_mass_exact();
    let err = (report.extrapolated - exact).abs();
    out.check(
        "adm_mass",
        err <= tol.mass_rel * exact.abs() + 1e-10,
        format!("extrapolated {} vs exact {exact}", report.extrapolated),
    );
    let rows: Vec<_> = report
        .radii
        .iter()
        .zip(&report.estimates)
        .map(|(&r, &e)| row![r, e])
        .collect();
    out.csv("adm.csv", &["radius[coord;L]", "flux_mass[-;L]"], &rows)?;
    out.result("adm", &report)?;

    let spheres: Vec<(f64, f64, f64, f64, f64, f64)> = cfg
        .sweep
        .rho
        .par_iter()
        .map(|&rho| {
            let area = g.area(rho);
            (
                rho,
                area,
                hawking_mass(area, g.mean_curvature(rho)),
                hawking_mass_quadrature(&g, rho),
                centered_iso_mass(&g, rho),
                sharp_residual(&g, rho),
            )
        })
        .collect();
    let rows: Vec<_> = spheres
        .iter()
        .map(|s| row![s.0, s.1, s.2, s.3, s.4, s.5])
        .collect();
    out.csv(
        "spheres.csv",
        &[
            "rho[coord;L]",
            "area[metric;L^2]",
            "hawking_closed[metric;L]",
            "hawking_quadrature[metric;L]",
            "m_iso[metric;L]",
            "sharp_residual[metric;L]",
        ],
        &rows,
    )?;
    // Hawking mass of centred spheres is exactly m only without perturbation.
    if cfg.metric.family != Family::Perturbed || cfg.metric.eps == 0.0 {
        let closed = spheres.iter().map(|s| (s.2 - m).abs()).fold(0.0, f64::max);
        let quad = spheres.iter().map(|s| (s.3 - m).abs()).fold(0.0, f64::max);
        out.check(
            "hawking_mass",
            closed < 1e-8 && quad < 1e-4,
            format!("max |m_H - m|: closed form {closed:e}, quadrature {quad:e}"),
        );
    }
    let errs: Vec<f64> = spheres.iter().map(|s| (s.4 - m).abs()).collect();
    let approaching =
        m == 0.0 && errs.iter().all(|e| *e < 1e-8) || errs.windows(2).all(|w| w[1] < w[0]);
    out.check(
        "iso_mass_trend",
        approaching,
        format!("|m_iso - m| over rho: {errs:?}"),
    );
    out.result(
        "spheres",
        spheres
            .iter()
            .map(|s| json!({"rho": s.0, "hawking": s.2, "hawking_quadrature": s.3, "m_iso": s.4, "sharp_residual": s.5}))
            .collect::<Vec<_>>(),
    )
}

pub fn ms_path(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let tol = cfg.tolerances.area;
    let paths = cfg
        .sweep
        .sigma
        .par_iter()
        .map(|&sigma| {
            Ok((
                sigma,
                build_path(&boundary_field(cfg, sigma), sigma, cfg.resolution.steps)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Vec::new();
    for (sigma, path) in &paths {
        let rows: Vec<_> = path
            .rows()
            .iter()
            .map(|r| {
                row![
                    r.t,
                    r.area_deviation,
                    r.psi_max,
                    r.a_prime_abs,
                    r.endpoint_oscillation
                ]
            })
            .collect();
        out.csv(
            &format!("ms_path_sigma{sigma}.csv"),
            &[
                "t[coord;L]",
                "area_deviation[metric;relative]",
                "psi_max[round;1]",
                "a_prime_abs[-;1/L]",
                "endpoint_oscillation[-;1]",
            ],
            &rows,
        )?;
        let dev = path.max_area_deviation().deviation;
        let osc = path.endpoint_oscillation();
        out.check(
            format!("area_preservation sigma={sigma}"),
            dev <= tol && osc <= tol,
            format!("max area deviation {dev:e}, endpoint oscillation {osc:e} (tol {tol:e})"),
        );
        summary.push(json!({
            "sigma": sigma,
            "max_area_deviation": dev,
            "endpoint_oscillation": osc,
            "area_drift": path.area_drift(),
            "max_a_prime": path.max_a_prime(),
        }));
    }
    out.result("paths", summary)?;

    if cfg.sweep.sigma.len() >= 3 {
        let study = path_scaling_study(
            |s| boundary_field(cfg, s),
            &cfg.sweep.sigma,
            Some(cfg.resolution.steps),
        )?;
        if cfg.boundary.scaling == Scaling::Decay {
            let target = -(1.0 + cfg.metric.tau);
            let slack = cfg.tolerances.exponent;
            let ok = [study.psi_exponent, study.a_prime_exponent]
                .iter()
                .all(|f| f.exponent().is_none_or(|p| p <= target + slack));
            out.check(
                "path_scaling",
                ok,
                format!(
                    "exponents psi {:?}, a' {:?} (at most {target} + {slack})",
                    study.psi_exponent.exponent(),
                    study.a_prime_exponent.exponent()
                ),
            );
        }
        out.result("scaling", &study)?;
    }
    Ok(())
}

pub fn collar(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let g = cfg.metric()?;
    let m = cfg.mass();
    let rows = cfg
        .sweep
        .sigma
        .par_iter()
        .map(|&sigma| {
            let glued = GluedMetric::new(g, sigma)?;
            Ok((
                glued.row()?,
                glued.boundary_mean_curvatures(),
                glued.radius_defect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    let mut jumps_positive = true;
    let mut defect_ok = true;
    for (r, h, defect) in &rows {
        worst = worst
            .max((h.leaf_collar * r.sigma / 2.0 - 1.0).abs())
            .max((h.fill_collar * r.sigma / 4.0 - 1.0).abs());
        jumps_positive &= h.outer_jump() > 0.0;
        if r.sigma >= 64.0 && m > 0.0 {
            defect_ok &= *defect >= m / r.sigma;
        }
    }
    out.check(
        "mean_curvature_identities",
        worst < 1e-12,
        format!("max relative error of H = 2/sigma, 4/sigma: {worst:e}"),
    );
    if m > 0.0 {
        out.check(
            "outer_jump_positive",
            jumps_positive,
            "H(Sigma', g_E) > H(Sigma', gamma)",
        );
        out.check(
            "radius_defect",
            defect_ok,
            "1 - R^2/sigma^2 >= m/sigma for sigma >= 64",
        );
    }
    let csv_rows: Vec<_> = rows
        .iter()
        .map(|(r, h, d)| {
            row![
                r.sigma,
                r.area_radius,
                r.max_scalar_curvature,
                r.h_leaf_g,
                r.h_leaf_collar,
                r.h_fill_collar,
                r.h_fill_euclidean,
                h.outer_jump(),
                *d,
                r.hawking_mass,
                r.volume,
                r.leaf_area
            ]
        })
        .collect();
    out.csv(
        "collar.csv",
        &[
            "sigma[metric;L]",
            "area_radius[metric;L]",
            "max_scalar_curvature[metric;1/L^2]",
            "h_leaf_g[metric;1/L]",
            "h_leaf_collar[metric;1/L]",
            "h_fill_collar[metric;1/L]",
            "h_fill_euclidean[metric;1/L]",
            "outer_jump[metric;1/L]",
            "radius_defect[-;1]",
            "hawking_mass[metric;L]",
            "volume[metric;L^3]",
            "leaf_area[metric;L^2]",
        ],
        &csv_rows,
    )?;
    out.result("collar", rows.iter().map(|r| r.0).collect::<Vec<_>>())?;

    if cfg.sweep.sigma.len() >= 3 {
        let study = collar_decay_study(
            |s| boundary_field(cfg, s),
            &cfg.sweep.sigma,
            cfg.resolution.steps,
        )?;
        let rows: Vec<_> = study
            .sigmas
            .iter()
            .zip(&study.max_curvature)
            .map(|(&s, &r)| row![s, r])
            .collect();
        out.csv(
            "collar_decay.csv",
            &["sigma[metric;L]", "max_abs_scalar_curvature[metric;1/L^2]"],
            &rows,
        )?;
        if cfg.boundary.scaling == Scaling::Decay {
            let target = -(2.0 + cfg.metric.tau);
            let p = study.fit.exponent();
            out.check(
                "collar_decay",
                p.is_none_or(|p| (p - target).abs() <= cfg.tolerances.exponent),
                format!("fitted exponent {p:?}, target {target}"),
            );
        }
        out.result("collar_decay", &study)?;
    }
    Ok(())
}

pub fn smooth(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let g = cfg.metric()?;
    let points: Vec<(f64, f64)> = cfg
        .sweep
        .sigma
        .iter()
        .flat_map(|&s| cfg.deltas(s).into_iter().map(move |d| (s, d)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(sigma, delta)| {
            let glued = GluedMetric::new(g, sigma)?;
            let row = smooth_row(&smooth_corner(&glued, delta)?);
            let half = smooth_corner(&glued, delta / 2.0)?;
            let c_half =
                half.band_integral(Surface::Outer) / half.mean_curvature_jump(Surface::Outer);
            Ok((row, c_half))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows
        .iter()
        .map(|(r, h)| (h / r.spike_constant - 1.0).abs())
        .fold(0.0, f64::max);
    if cfg.mass() > 0.0 {
        out.check(
            "spike_constant_halving",
            worst < cfg.tolerances.spike_rel,
            format!("max relative change of band integral / jump under delta halving: {worst:e}"),
        );
    }
    let csv_rows: Vec<_> = rows
        .iter()
        .map(|(r, h)| {
            row![
                r.sigma,
                r.delta,
                r.band_integral,
                r.jump,
                r.spike_constant,
                *h,
                r.spike_peak,
                r.f_l32,
                r.c0,
                r.in_regime
            ]
        })
        .collect();
    out.csv(
        "smooth.csv",
        &[
            "sigma[metric;L]",
            "delta[metric;L]",
            "band_integral[metric;1/L]",
            "mean_curvature_jump[metric;1/L]",
            "spike_constant[-;1]",
            "spike_constant_half_delta[-;1]",
            "spike_peak[metric;1]",
            "f_l32[metric;1]",
            "c0[-;1]",
            "in_regime[-;bool]",
        ],
        &csv_rows,
    )?;
    out.result("smooth", rows.iter().map(|r| r.0).collect::<Vec<_>>())
}

struct Solved {
    sigma: f64,
    delta: f64,
    area_radius: f64,
    spike_constant: f64,
    f_l32: f64,
    solution: ConformalSolution,
}

fn solve_points(cfg: &ScenarioConfig, points: &[(f64, f64)]) -> Result<Vec<Solved>> {
    let g = cfg.metric()?;
    let opts = options(cfg);
    points
        .par_iter()
        .map(|&(sigma, delta)| {
            let glued = GluedMetric::new(g, sigma)?;
            let sm = smooth_corner(&glued, delta)?;
            let aux = build_scalar_aux(&sm);
            Ok(Solved {
                sigma,
                delta,
                area_radius: glued.area_radius,
                spike_constant: sm.spike_constant(),
                f_l32: aux.l32_integral(),
                solution: solve_conformal(&aux, &opts)?,
            })
        })
        .collect()
}

fn profile_csv(out: &mut Outputs, name: &str, sol: &ConformalSolution) -> Result<()> {
    let rows: Vec<_> = sol.outer.iter().map(|s| row![s.r, s.u, s.u_r]).collect();
    out.csv(name, &["r[coord;L]", "u[-;1]", "u_r[coord;1/L]"], &rows)
}

pub fn conformal(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let m = cfg.mass();
    let points: Vec<(f64, f64)> = cfg
        .sweep
        .sigma
        .iter()
        .flat_map(|&s| cfg.deltas(s).into_iter().map(move |d| (s, d)))
        .collect();
    let solved = solve_points(cfg, &points)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let (mut id_worst, mut disc_worst): (f64, f64) = (0.0, 0.0);
    for s in &solved {
        let sol = &s.solution;
        id_worst = id_worst.max(sol.identity_error());
        let (direct, disc) = if m > 0.0 {
            let cmp = mass_shift(sol, m)?;
            disc_worst = disc_worst.max(cmp.discrepancy);
            (cmp.direct.extrapolated, cmp.discrepancy)
        } else {
            (f64::NAN, f64::NAN)
        };
        rows.push(row![
            s.sigma,
            s.delta,
            sol.a,
            sol.a_half_window,
            sol.identity_error(),
            sol.residual,
            sol.min_u,
            sol.sup_deviation_beyond(s.sigma / 2.0),
            direct,
            disc
        ]);
        records.push(json!({
            "sigma": s.sigma, "delta": s.delta, "a": sol.a, "a_half_window": sol.a_half_window,
            "identity_error": sol.identity_error(), "residual": sol.residual, "min_u": sol.min_u,
            "adm_direct": direct, "adm_discrepancy": disc,
        }));
    }
    out.csv(
        "conformal.csv",
        &[
            "sigma[metric;L]",
            "delta[metric;L]",
            "a[coord;L]",
            "a_half_window[coord;L]",
            "identity_error[-;relative]",
            "step_doubling_residual[-;1]",
            "min_u[-;1]",
            "sup_deviation_beyond_half_sigma[-;1]",
            "adm_direct[metric;L]",
            "adm_discrepancy[-;relative]",
        ],
        &rows,
    )?;
    for s in solved.iter().filter(|s| s.delta == cfg.deltas(s.sigma)[0]) {
        profile_csv(out, &format!("u_sigma{}.csv", s.sigma), &s.solution)?;
    }
    out.check(
        "integral_identity",
        id_worst < cfg.tolerances.identity,
        format!("max relative identity error {id_worst:e}"),
    );
    if m > 0.0 {
        out.check(
            "adm_consistency",
            disc_worst < cfg.tolerances.mass_rel,
            format!("max |m(u^4 g) - (m + 2A)| / m = {disc_worst:e}"),
        );
    }
    out.result("solves", records)?;

    let firsts: Vec<(f64, &ConformalSolution)> = solved
        .iter()
        .filter(|s| s.delta == cfg.deltas(s.sigma)[0])
        .map(|s| (s.sigma, &s.solution))
        .collect();
    if firsts.len() >= 3 {
        let sup = sup_estimate_check(&firsts)?;
        out.check(
            "sup_estimate",
            sup.pass,
            format!("sup |u - 1| exponent {:?}", sup.fit.exponent()),
        );
        out.result("sup_estimate", &sup)?;
    }
    Ok(())
}

pub fn pipeline(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let m = cfg.mass();
    let points: Vec<(f64, f64)> = cfg
        .sweep
        .sigma
        .iter()
        .map(|&s| (s, cfg.deltas(s)[0]))
        .collect();
    let solved = solve_points(cfg, &points)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut ratios = Vec::new();
    for s in &solved {
        let sol = &s.solution;
        let cmp = mass_shift(sol, m)?;
        ratios.push(cmp.ratio);
        rows.push(row![
            s.sigma,
            s.delta,
            s.area_radius,
            s.spike_constant,
            s.f_l32,
            sol.a,
            cmp.m_before,
            cmp.m_after,
            cmp.ratio,
            cmp.direct.extrapolated,
            sol.identity_error()
        ]);
        records.push(json!({
            "sigma": s.sigma, "delta": s.delta, "a": sol.a, "m_before": cmp.m_before,
            "m_after": cmp.m_after, "ratio": cmp.ratio, "adm_direct": cmp.direct.extrapolated,
            "identity_error": sol.identity_error(),
        }));
    }
    out.csv(
        "pipeline.csv",
        &[
            "sigma[metric;L]",
            "delta[metric;L]",
            "area_radius[metric;L]",
            "spike_constant[-;1]",
            "f_l32[metric;1]",
            "a[coord;L]",
            "m_before[-;L]",
            "m_after[-;L]",
            "ratio[-;1]",
            "adm_direct[metric;L]",
            "identity_error[-;relative]",
        ],
        &rows,
    )?;
    for s in &solved {
        profile_csv(out, &format!("u_sigma{}.csv", s.sigma), &s.solution)?;
    }
    let (lo, hi) = min_max(ratios.iter().copied());
    out.check(
        "mass_decreases",
        hi < 1.0,
        format!("m_after / m_before at most {hi}"),
    );
    out.check(
        "ratio_bound",
        lo <= cfg.tolerances.ratio,
        format!("min ratio {lo} (bound {})", cfg.tolerances.ratio),
    );
    out.result("pipeline", records)?;
    out.result("min_ratio", lo)
}

pub fn profile(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let g = cfg.metric()?;
    let core = g.inner_radius();
    let centred: Vec<_> = cfg
        .sweep
        .rho
        .iter()
        .map(|&rho| {
            let (v, a) = (g.volume(rho), g.area(rho));
            row![
                rho,
                v,
                a,
                quasilocal_iso_mass(v, a),
                sharp_residual(&g, rho)
            ]
        })
        .collect();
    out.csv(
        "centred.csv",
        &[
            "rho[coord;L]",
            "volume[metric;L^3]",
            "area[metric;L^2]",
            "m_iso[metric;L]",
            "sharp_residual[metric;L]",
        ],
        &centred,
    )?;
    let trials: Vec<(f64, f64)> = cfg
        .sweep
        .rho
        .iter()
        .flat_map(|&r| {
            cfg.sweep
                .xi
                .iter()
                .filter(|x| **x > 0.0)
                .map(move |&x| (r, x))
        })
        .collect();
    let cmps = trials
        .par_iter()
        .map(|&(rho, xi)| {
            Ok(compare_with_centered(
                &g,
                &TrialRegion::along_axis(rho, xi)?,
                core,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = cmps
        .iter()
        .map(|c| {
            row![
                c.region.rho,
                c.region.xi_norm(),
                c.volume,
                c.area_trial,
                c.area_centered,
                c.rho_centered,
                c.centered_wins()
            ]
        })
        .collect();
    out.csv(
        "trials.csv",
        &[
            "rho[coord;L]",
            "xi[coord;rho]",
            "volume[metric;L^3]",
            "area_trial[metric;L^2]",
            "area_centred[metric;L^2]",
            "rho_centred[coord;L]",
            "centred_wins[-;bool]",
        ],
        &rows,
    )?;
    if cfg.mass() > 0.0 && !cmps.is_empty() {
        let losers: Vec<(f64, f64)> = cmps
            .iter()
            .filter(|c| !c.centered_wins())
            .map(|c| (c.region.rho, c.region.xi_norm()))
            .collect();
        out.check(
            "centred_balls_win",
            losers.is_empty(),
            format!("offset balls not beaten at (rho, xi) {losers:?}"),
        );
    }
    out.result("trials", &cmps)
}

pub fn centering(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<()> {
    let m = cfg.mass();
    let eps0 = cfg.centering.eps0;
    let n = cfg.resolution.mc_samples;
    let points: Vec<(usize, f64, f64)> = cfg
        .sweep
        .rho
        .iter()
        .flat_map(|&r| cfg.sweep.xi.iter().map(move |&x| (r, x)))
        .enumerate()
        .map(|(k, (r, x))| (k, r, x))
        .collect();
    let seed = cfg.seed;
    let results = points
        .par_iter()
        .map(|&(k, rho, xi)| {
            let region = TrialRegion::along_axis(rho, xi)?;
            let exact = centering_integrals(&region);
            let mc = centering_integrals_monte_carlo(&region, n, seed.wrapping_add(k as u64));
            let model = if m > 0.0 {
                Some(centering_model(&region, m, eps0)?)
            } else {
                None
            };
            Ok((rho, xi, exact, mc, model))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut worst: f64 = 0.0;
    let mut integral_rows = Vec::new();
    let mut model_rows = Vec::new();
    let mut records = Vec::new();
    let mut bound_ok = true;
    for (rho, xi, exact, (s, v), model) in &results {
        for (est, val) in [(s, exact.surface), (v, exact.volume)] {
            // Constant integrand at xi = 0: floor at summation round-off.
            let se = est.std_error.max(n as f64 * f64::EPSILON * val.abs());
            worst = worst.max((est.value - val).abs() / se);
        }
        integral_rows.push(row![
            *rho,
            *xi,
            exact.surface,
            s.value,
            s.std_error,
            exact.volume,
            v.value,
            v.std_error
        ]);
        let mut rec =
            json!({"rho": rho, "xi": xi, "surface": exact.surface, "volume": exact.volume});
        if let Some(md) = model {
            let (vol, area) = (md.after.volume, md.after.area);
            model_rows.push(row![
                *rho,
                *xi,
                vol,
                area,
                quasilocal_iso_mass(vol, area),
                md.measured,
                md.bound
            ]);
            rec["deficit"] = json!(md.measured);
            rec["deficit_bound"] = json!(md.bound);
            if *rho >= 100.0 && *xi > 0.0 {
                bound_ok &= md.measured >= cfg.tolerances.bound_fraction * md.bound;
            }
        }
        records.push(rec);
    }
    out.csv(
        "centering_integrals.csv",
        &[
            "rho[coord;L]",
            "xi[coord;rho]",
            "surface_exact[coord;L^2]",
            "surface_mc[coord;L^2]",
            "surface_se[coord;L^2]",
            "volume_exact[coord;L^2]",
            "volume_mc[coord;L^2]",
            "volume_se[coord;L^2]",
        ],
        &integral_rows,
    )?;
    out.check(
        "monte_carlo_agreement",
        worst <= cfg.tolerances.mc_std_errors,
        format!("max |mc - exact| / se = {worst:.3}"),
    );
    if m > 0.0 {
        out.csv(
            "centering.csv",
            &[
                "rho[coord;L]",
                "xi[coord;rho]",
                "volume[metric;L^3]",
                "area[metric;L^2]",
                "m_iso[metric;L]",
                "deficit[metric;L^3]",
                "bound[coord;L^3]",
            ],
            &model_rows,
        )?;
        out.check(
            "deficit_meets_bound",
            bound_ok,
            format!(
                "measured deficit >= {} x bound for rho >= 100, xi > 0",
                cfg.tolerances.bound_fraction
            ),
        );
    }
    out.result("eps0", eps0)?;
    out.result("points", records)
}
