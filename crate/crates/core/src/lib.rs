//! Numerical laboratory for torsion functions of planar convex domains.
//!
//! The torsion function `u` of a domain solves `Δu = -1` inside and vanishes
//! on the boundary. This crate solves that problem on embedded-boundary grids,
//! evaluates smooth jets of the result, certifies power concavity of `u`,
//! tests convexity of `√(M - u)` ("property (A)"), and expands `M - u` about
//! its maximum into a quadratic part plus a harmonic remainder whose first
//! non-vanishing circular mode detects non-elliptical domains.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod concavity;
pub mod error;
pub mod field_calculus;
pub mod geometry;
pub mod harmonic;
pub mod solver;

pub use error::{Result, TorsionError};

/// Planar point or vector.
pub type Point = nalgebra::Vector2<f64>;
