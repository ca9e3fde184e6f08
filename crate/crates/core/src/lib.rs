//! Numerical toolkit for mass functionals and fill-in constructions on
//! asymptotically flat 3-manifolds.
//!
//! The crate is organised bottom-up:
//!
//! - [`s2`]: fields on the unit sphere, spectral transforms, the
//!   Laplace-Beltrami operator and the Poisson solver for conformal metrics.
//! - [`ms_path`]: the area-preserving conformal path from a perturbed sphere
//!   to a round one, including the generating flow.
//! - [`collar`]: the collar metric over that path, its scalar curvature, the
//!   Euclidean fill ball and the glued metric.
//! - [`smooth`]: mollification of the glued metric across both corners in the
//!   spherically symmetric reduction, plus the auxiliary potential.
//! - [`conformal`]: the conformal equation, the 1/r coefficient and the mass
//!   shift it induces.
//! - [`mass`] and [`isoperimetric`]: ADM, Hawking and isoperimetric masses,
//!   the isoperimetric profile over centred and off-centre balls, and the
//!   centering integrals.

pub mod collar;
pub mod conformal;
pub mod error;
pub mod fit;
pub mod isoperimetric;
pub mod mass;
pub mod ms_path;
pub mod quad;
pub mod radial;
pub mod s2;
pub mod smooth;

pub use error::{Error, Result};
