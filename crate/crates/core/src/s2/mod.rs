//! Scalar fields, spectral transforms and elliptic operators on the 2-sphere.

mod field;
mod grid;
mod interp;
mod ops;
mod sht;

pub use field::{S2ConformalMetric, S2Field};
pub use grid::SphereGrid;
pub use interp::{from_spherical, to_spherical, LatLonTable, Stencil};
pub use ops::{
    average, gradient_and_hessian, laplace_beltrami, poisson_residual, quadrature, round_gradient,
    round_gradient_of, round_laplacian, solve_poisson, solve_poisson_spectral, GradHess,
    POISSON_RESIDUAL_TOL, POISSON_SOLVABILITY_TOL,
};
pub use sht::{coeffs_from_terms, evaluate_at, SpectralCoeffs};
