//! Reproducing kernels and quadrature-domain constructions for smoothly
//! bounded multiply connected planar domains.

// `!(x <= tol)` is deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bergman;
pub mod error;
pub mod geometry;
pub mod gustafsson;
pub mod harmonic;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod spectral;
pub mod testdomains;
pub mod zip;

pub use error::{Error, Result};
pub use geometry::{Curve, CurveRole, Domain, Location};
pub use num_complex::Complex64;
