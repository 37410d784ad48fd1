//! Numerical toolkit for discretized planar measures: regularized Cauchy
//! transforms, Riesz test-function systems, multiscale net/graph curve
//! construction with length accounting, bad-square Carleson analysis, and
//! blow-up rescaling.
//!
//! A measure is represented by a weighted point cloud ([`measure::PointCloudMeasure`])
//! and all integrals become weighted sums (midpoint quadrature). Everything
//! downstream is deterministic given the cloud and the parameters.

pub mod badsquares;
pub mod cauchy;
pub mod curve;
pub mod dyadic;
pub mod error;
pub mod io;
pub mod measure;
pub mod riesz;
pub mod spatial;

pub use error::{Error, Result};

/// A point in the plane, identified with a complex number (`re` = x, `im` = y).
pub type Point = num_complex::Complex64;

/// Euclidean distance between two planar points.
#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a - b).norm()
}
