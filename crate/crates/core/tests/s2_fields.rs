mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use afiso_core::s2::{
    average, coeffs_from_terms, gradient_and_hessian, laplace_beltrami, quadrature, solve_poisson,
    S2ConformalMetric, S2Field, SphereGrid,
};
use afiso_core::Error;
use proptest::prelude::*;

fn metric_from(
    grid: &Arc<SphereGrid>,
    sigma: f64,
    u: impl Fn(f64, f64) -> f64,
) -> S2ConformalMetric {
    S2ConformalMetric::new(sigma, S2Field::from_fn(grid, u)).unwrap()
}

#[test]
fn quadrature_of_constants() {
    let grid = SphereGrid::new(8);
    let one = S2Field::constant(&grid, 1.0);
    let round = S2ConformalMetric::round(&grid, 1.0);
    assert!((quadrature(&one, &round).unwrap() - 4.0 * PI).abs() < 1e-13);
    let c = 0.37;
    let scaled = metric_from(&grid, 1.0, |_, _| c);
    let q = quadrature(&one, &scaled).unwrap();
    assert!((q - 4.0 * PI * (2.0 * c).exp()).abs() < 1e-12);
}

#[test]
fn quadrature_of_p2_matches_dense_riemann_sum() {
    let grid = SphereGrid::new(8);
    let p2 = |th: f64| 0.5 * (3.0 * th.cos().powi(2) - 1.0);
    let field = S2Field::from_fn(&grid, |th, _| p2(th));
    let q = quadrature(&field, &S2ConformalMetric::round(&grid, 1.0)).unwrap();
    // Midpoint rule in theta on 20000 cells; phi integral is exact.
    let n = 20000;
    let h = PI / n as f64;
    let riemann: f64 = (0..n)
        .map(|j| {
            let th = (j as f64 + 0.5) * h;
            p2(th) * th.sin() * h
        })
        .sum::<f64>()
        * 2.0
        * PI;
    assert!(riemann.abs() < 1e-7);
    assert!((q - riemann).abs() < 1e-7, "{q} vs {riemann}");
    assert!(q.abs() < 1e-14);
}

#[test]
fn quadrature_rejects_mismatched_grids() {
    let a = S2Field::zeros(&SphereGrid::new(8));
    let m = S2ConformalMetric::round(&SphereGrid::new(10), 1.0);
    assert!(matches!(
        quadrature(&a, &m),
        Err(Error::ResolutionMismatch { .. })
    ));
}

#[test]
fn laplacian_eigenfunction_examples() {
    let grid = SphereGrid::new(12);
    let cos = S2Field::from_fn(&grid, |th, _| th.cos());
    let c = S2Field::constant(&grid, 2.5);
    for sigma in [1.0, 10.0] {
        let m = S2ConformalMetric::round(&grid, sigma);
        let lc = laplace_beltrami(&c, &m).unwrap().max_abs();
        assert!(lc < 1e-12, "{lc}");
        let lap = laplace_beltrami(&cos, &m).unwrap();
        let expect = cos.scale(-2.0 / (sigma * sigma));
        assert!(lap.zip_map(&expect, |a, b| a - b).max_abs() < 1e-13);
    }
}

#[test]
fn poisson_examples() {
    let grid = SphereGrid::new(12);
    let m = S2ConformalMetric::round(&grid, 1.0);
    assert!(solve_poisson(&S2Field::zeros(&grid), &m).unwrap().max_abs() == 0.0);
    let cos = S2Field::from_fn(&grid, |th, _| th.cos());
    let psi = solve_poisson(&cos, &m).unwrap();
    assert!(psi.zip_map(&cos, |p, c| p + c / 2.0).max_abs() < 1e-13);
}

#[test]
fn poisson_rejects_unbalanced_rhs() {
    let grid = SphereGrid::new(8);
    let m = S2ConformalMetric::round(&grid, 1.0);
    let err = solve_poisson(&S2Field::constant(&grid, 1.0), &m).unwrap_err();
    assert!(matches!(err, Error::PoissonImbalance { .. }), "{err}");
}

#[test]
fn poisson_matches_finite_difference_solve() {
    let sigma = 1.0;
    let u = |th: f64| 0.05 * th.cos();
    let raw = |th: f64| 0.1 * (3.0 * th.cos().powi(2) - 1.0);
    let grid = SphereGrid::new(32);
    let metric = metric_from(&grid, sigma, |th, _| u(th));
    let rhs0 = S2Field::from_fn(&grid, |th, _| raw(th));
    // The P2 datum is not mean-zero in the perturbed area form.
    let mean = average(&rhs0, &metric).unwrap();
    let rhs = rhs0.map(|v| v - mean);
    let psi = solve_poisson(&rhs, &metric).unwrap();

    let (centres, fd) = common::poisson_fd_axisymmetric(u, |th| raw(th) - mean, sigma, 40000);
    for (i, &th) in grid.theta().iter().enumerate() {
        let lib = psi.values()[grid.index(i, 3)];
        let oracle = common::sample_uniform(&centres, &fd, th);
        assert!((lib - oracle).abs() < 1e-6, "theta {th}: {lib} vs {oracle}");
    }
}

#[test]
fn gradient_examples() {
    let grid = SphereGrid::new(16);
    let round = S2ConformalMetric::round(&grid, 1.0);
    let gh = gradient_and_hessian(&S2Field::constant(&grid, 1.5), &round).unwrap();
    for k in 0..gh.len() {
        assert!(gh.gradient_norm(k) < 1e-13 && gh.hessian_norm(k) < 1e-12);
    }
    let gh = gradient_and_hessian(&S2Field::from_fn(&grid, |th, _| th.cos()), &round).unwrap();
    let h = 1e-5;
    for (i, &th) in grid.theta().iter().enumerate() {
        let fd = ((th + h).cos() - (th - h).cos()) / (2.0 * h);
        for j in 0..grid.n_phi() {
            let g = gh.gradient_norm(grid.index(i, j));
            assert!((g - th.sin().abs()).abs() < 1e-12);
            assert!((g - fd.abs()).abs() < 1e-9);
        }
    }
}

#[test]
fn hessian_trace_is_laplacian() {
    let grid = SphereGrid::new(20);
    let metric = metric_from(&grid, 3.0, |th, ph| {
        0.1 * th.cos() + 0.05 * th.sin() * ph.sin()
    });
    let f = S2Field::from_coeffs(
        &grid,
        &coeffs_from_terms(
            &grid,
            &[(1, 1, 0.4, -0.2), (3, 0, 0.7, 0.0), (4, 2, 0.1, 0.3)],
        ),
    );
    let gh = gradient_and_hessian(&f, &metric).unwrap();
    let lap = laplace_beltrami(&f, &metric).unwrap();
    for k in 0..gh.len() {
        assert!((gh.trace(k) - lap.values()[k]).abs() < 1e-8);
    }
}

const L: usize = 5;

fn coeff_strategy() -> impl Strategy<Value = Vec<(usize, usize, f64, f64)>> {
    let terms: Vec<(usize, usize)> = (1..=L).flat_map(|l| (0..=l).map(move |m| (l, m))).collect();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), terms.len()).prop_map(move |v| {
        terms
            .iter()
            .zip(v)
            .map(|(&(l, m), (a, b))| (l, m, a, if m == 0 { 0.0 } else { b }))
            .collect()
    })
}

fn setup(
    fc: &[(usize, usize, f64, f64)],
    uc: &[(usize, usize, f64, f64)],
    sigma: f64,
) -> (S2Field, S2ConformalMetric) {
    let grid = SphereGrid::new(16);
    let f = S2Field::from_coeffs(&grid, &coeffs_from_terms(&grid, fc));
    let small: Vec<_> = uc
        .iter()
        .map(|&(l, m, a, b)| (l, m, 0.05 * a, 0.05 * b))
        .collect();
    let u = S2Field::from_coeffs(&grid, &coeffs_from_terms(&grid, &small));
    (f, S2ConformalMetric::new(sigma, u).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplacian_is_self_adjoint(fc in coeff_strategy(), hc in coeff_strategy(), uc in coeff_strategy(), sigma in 0.5f64..20.0) {
        let (f, metric) = setup(&fc, &uc, sigma);
        let grid = f.grid().clone();
        let h = S2Field::from_coeffs(&grid, &coeffs_from_terms(&grid, &hc));
        let lf = laplace_beltrami(&f, &metric).unwrap();
        let lh = laplace_beltrami(&h, &metric).unwrap();
        let a = quadrature(&f.zip_map(&lh, |x, y| x * y), &metric).unwrap();
        let b = quadrature(&h.zip_map(&lf, |x, y| x * y), &metric).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn solve_inverts_laplacian(fc in coeff_strategy(), uc in coeff_strategy(), sigma in 0.5f64..20.0) {
        let (f, metric) = setup(&fc, &uc, sigma);
        let mean = average(&f, &metric).unwrap();
        let f0 = f.map(|v| v - mean);
        let back = solve_poisson(&laplace_beltrami(&f0, &metric).unwrap(), &metric).unwrap();
        prop_assert!(back.zip_map(&f0, |a, b| a - b).max_abs() < 1e-9);
    }

    #[test]
    fn laplacian_integrates_to_zero(fc in coeff_strategy(), uc in coeff_strategy(), sigma in 0.5f64..20.0) {
        let (f, metric) = setup(&fc, &uc, sigma);
        let q = quadrature(&laplace_beltrami(&f, &metric).unwrap(), &metric).unwrap();
        prop_assert!(q.abs() < 1e-10, "{}", q);
    }
}
