//! Planar convex domains, embedded-boundary grids and level-set curves.

mod contour;
mod domain;
mod grid;

pub use contour::{is_convex_curve, marching_level_set, polygon_metrics, NodeGrid, PolygonMetrics};
pub use domain::{is_convex_polyline, signed_area, BoundarySample, Domain, COEFFICIENT_SUM_TOL};
pub use grid::{GridMask, NodeKind, DIRECTIONS, GHOST_LAYERS};
