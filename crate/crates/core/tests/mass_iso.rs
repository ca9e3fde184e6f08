mod common;

use std::f64::consts::PI;

use afiso_core::isoperimetric::{
    ball_volume_area, centering_deficit, centering_integrals, centering_integrals_monte_carlo,
    centering_model, compare_with_centered, iso_profile_radial, sharp_residual, TrialRegion,
    VolumeArea,
};
use afiso_core::mass::{
    adm_mass, centered_iso_mass, hawking_mass, hawking_mass_quadrature, quasilocal_iso_mass,
};
use afiso_core::radial::RadialAFMetric;
use afiso_core::Error;

fn radii(m: f64) -> Vec<f64> {
    (5..=9).map(|k| 2f64.powi(k) * m).collect()
}

#[test]
fn adm_mass_examples() {
    let flat = adm_mass(&RadialAFMetric::flat(), &[4.0, 8.0, 16.0]).unwrap();
    assert!(flat.estimates.iter().all(|m| *m == 0.0));
    for m in [0.5, 1.0, 2.0] {
        let r = adm_mass(&RadialAFMetric::schwarzschild(m), &radii(m)).unwrap();
        assert!(
            (r.extrapolated - m).abs() < 0.01 * m,
            "{m}: {}",
            r.extrapolated
        );
        assert!(!r.non_monotone);
    }
}

#[test]
fn adm_mass_shifts_by_twice_the_coefficient() {
    let (m, a) = (1.0, -0.3);
    let g = RadialAFMetric::schwarzschild(m).with_shift(a);
    let coarse = adm_mass(&g, &radii(1.0)).unwrap().extrapolated;
    let fine = adm_mass(&g, &radii(8.0)).unwrap().extrapolated;
    let target = m + 2.0 * a;
    assert!((coarse - target).abs() < 0.01 * m);
    assert!((fine - target).abs() <= (coarse - target).abs() + 1e-12);
}

#[test]
fn adm_rejects_radii_inside_the_chart() {
    let g = RadialAFMetric::schwarzschild(1.0).with_shift(-2.0);
    assert!(matches!(
        adm_mass(&g, &[1.0, 2.0, 4.0]),
        Err(Error::OutOfRange { .. })
    ));
}

#[test]
fn hawking_mass_of_schwarzschild_spheres() {
    let m = 1.0;
    let g = RadialAFMetric::schwarzschild(m);
    for rho in [10.0, 100.0, 1000.0] {
        let closed = hawking_mass(g.area(rho), g.mean_curvature(rho));
        assert!((closed - m).abs() < 1e-8, "{rho}: {closed}");
        let quad = hawking_mass_quadrature(&g, rho);
        assert!((quad - m).abs() < 1e-4, "{rho}: {quad}");
    }
}

#[test]
fn quasilocal_iso_mass_examples() {
    let rho: f64 = 3.7;
    let (v, a) = (4.0 / 3.0 * PI * rho.powi(3), 4.0 * PI * rho * rho);
    assert!(quasilocal_iso_mass(v, a).abs() < 1e-13);
    let (m, a): (f64, f64) = (0.8, 123.0);
    let v = a.powf(1.5) / (6.0 * PI.sqrt()) + m / 2.0 * a;
    assert!((quasilocal_iso_mass(v, a) - m).abs() < 1e-12);
}

#[test]
fn iso_mass_of_centred_spheres_tends_to_adm_mass() {
    let g = RadialAFMetric::schwarzschild(1.0);
    let ms: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| centered_iso_mass(&g, r))
        .collect();
    assert!((ms[1] - 1.0).abs() < 0.05, "{ms:?}");
    assert!((ms[2] - 1.0).abs() < (ms[1] - 1.0).abs());
    assert!((ms[1] - 1.0).abs() < (ms[0] - 1.0).abs());
}

#[test]
fn euclidean_profile() {
    let flat = RadialAFMetric::flat();
    for v in [1.0, 50.0, 1e6] {
        let p = iso_profile_radial(&flat, v, None).unwrap();
        let expect = (36.0 * PI).cbrt() * v.powf(2.0 / 3.0);
        assert!(((p.area - expect) / expect).abs() < 1e-10);
    }
    assert!(matches!(
        iso_profile_radial(&flat, -1.0, None),
        Err(Error::OutOfRange { .. })
    ));
}

#[test]
fn schwarzschild_profile_inverts_volume() {
    let g = RadialAFMetric::schwarzschild(1.0);
    let core = g.inner_radius();
    let v = g.shell_volume(core, 100.0);
    let p = iso_profile_radial(&g, v, Some(core)).unwrap();
    assert!((p.rho - 100.0).abs() < 1e-8);
    assert!(((p.area - g.area(100.0)) / p.area).abs() < 1e-12);
    // The sharp inequality's residual is small relative to the area.
    let res: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| sharp_residual(&g, r))
        .collect();
    assert!(
        res[2].abs() < res[1].abs() && res[1].abs() < res[0].abs(),
        "{res:?}"
    );
}

#[test]
fn centred_balls_beat_offset_balls() {
    let g = RadialAFMetric::schwarzschild(1.0);
    let core = g.inner_radius();
    for rho in [50.0, 100.0, 200.0] {
        for xi in [0.25, 0.5, 1.0, 2.0] {
            let c = compare_with_centered(&g, &TrialRegion::along_axis(rho, xi).unwrap(), core)
                .unwrap();
            assert!(c.centered_wins(), "rho {rho} xi {xi}: {c:?}");
        }
    }
}

/// Volume and area of an offset ball that avoids the origin, by Gauss
/// quadrature in coordinates centred on the ball.
fn offset_ball_oracle(g: &RadialAFMetric, rho: f64, d: f64) -> VolumeArea {
    let rule = common::gauss_legendre(64);
    let dist = |s: f64, c: f64| (d * d + s * s + 2.0 * d * s * c).sqrt();
    let area =
        2.0 * PI * rho * rho * common::integrate(&rule, -1.0, 1.0, |c| g.phi(dist(rho, c)).powi(4));
    let volume = 2.0
        * PI
        * common::integrate(&rule, 0.0, rho, |s| {
            s * s * common::integrate(&rule, -1.0, 1.0, |c| g.phi(dist(s, c)).powi(6))
        });
    VolumeArea { volume, area }
}

#[test]
fn offset_ball_volume_and_area_match_direct_quadrature() {
    let g = RadialAFMetric::schwarzschild(1.0);
    for (rho, xi) in [(20.0, 1.5), (50.0, 2.0), (100.0, 3.0)] {
        let lib = ball_volume_area(&g, &TrialRegion::along_axis(rho, xi).unwrap(), 0.0);
        let oracle = offset_ball_oracle(&g, rho, rho * xi);
        assert!(((lib.volume - oracle.volume) / oracle.volume).abs() < 1e-9);
        assert!(((lib.area - oracle.area) / oracle.area).abs() < 1e-9);
    }
}

#[test]
fn centering_integral_examples() {
    let c = centering_integrals(&TrialRegion::along_axis(7.0, 0.0).unwrap());
    assert!((c.surface - 4.0 * PI * 49.0).abs() < 1e-10);
    assert!((c.volume - 2.0 * PI * 49.0).abs() < 1e-10);
    let c = centering_integrals(&TrialRegion::along_axis(10.0, 2.0).unwrap());
    assert!((c.surface - 200.0 * PI).abs() < 1e-10);
    assert!((c.volume - 209.439_510_239_319_55).abs() < 1e-9);
    // Both branches agree at |xi| = 1.
    let below = centering_integrals(&TrialRegion::along_axis(5.0, 1.0 - 1e-12).unwrap());
    let above = centering_integrals(&TrialRegion::along_axis(5.0, 1.0 + 1e-12).unwrap());
    assert!((below.surface - above.surface).abs() < 1e-8);
    assert!((below.volume - above.volume).abs() < 1e-8);
}

#[test]
fn centering_integrals_match_monte_carlo() {
    for (rho, xi) in [(1.0, 0.0), (10.0, 0.5), (10.0, 1.0), (30.0, 2.5)] {
        let region = TrialRegion::new(rho, [0.0, xi * 0.6, xi * 0.8]).unwrap();
        let exact = centering_integrals(&region);
        let (s, v) = centering_integrals_monte_carlo(&region, 1_000_000, 11);
        for (est, val) in [(s, exact.surface), (v, exact.volume)] {
            let diff = (est.value - val).abs();
            assert!(
                diff <= 3.0 * est.std_error + 1e-12 * val,
                "{rho} {xi}: {est:?} vs {val}"
            );
        }
    }
}

#[test]
fn centering_deficit_examples() {
    let (m, eps) = (1.0, 0.125);
    let d0 = centering_deficit(&TrialRegion::along_axis(100.0, 0.0).unwrap(), m, eps).unwrap();
    assert_eq!(d0, 0.0);
    let far = centering_deficit(&TrialRegion::along_axis(100.0, 1e6).unwrap(), m, eps).unwrap();
    assert!((far / (2.0 * eps * PI * m * 1e4) - 1.0).abs() < 1e-9);
    let one = centering_deficit(&TrialRegion::along_axis(100.0, 1.0).unwrap(), m, eps).unwrap();
    assert!((one - 1250.0 * PI).abs() < 1e-9);
    assert!(centering_deficit(&TrialRegion::along_axis(1.0, 1.0).unwrap(), m, 1.5).is_err());
}

#[test]
fn model_deficit_meets_the_bound() {
    let model = centering_model(&TrialRegion::along_axis(100.0, 1.0).unwrap(), 1.0, 0.125).unwrap();
    assert!(model.measured >= 0.9 * model.bound, "{model:?}");
    // Centred balls carry no rho^2 term, so the measured change is o(rho^2).
    let centred = |rho: f64| {
        let c = centering_model(&TrialRegion::along_axis(rho, 0.0).unwrap(), 1.0, 0.125).unwrap();
        assert_eq!(c.bound, 0.0);
        c.measured.abs() / (rho * rho)
    };
    let (a, b) = (centred(100.0), centred(1000.0));
    assert!(b < 0.2 * a, "{a} {b}");
    assert!(a < 0.2 * model.bound / 1e4, "{a}");
}
