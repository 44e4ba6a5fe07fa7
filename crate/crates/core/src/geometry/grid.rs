use serde::{Deserialize, Serialize};

use super::Domain;
use crate::{Point, Result, TorsionError};

/// Extra node layers kept around the domain's bounding box so that fields can
/// be extended past the boundary for interpolation.
pub const GHOST_LAYERS: i64 = 4;

/// Smallest admissible fractional leg length.
const MIN_THETA: f64 = 1e-10;

/// Nodes closer than this fraction of `h` to the boundary are treated as
/// boundary points carrying the Dirichlet value.
const SNAP: f64 = 1e-6;

/// Axis directions in stencil order: east, west, north, south.
pub const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    BoundaryAdjacent,
    Exterior,
}

/// Embedded-boundary Cartesian grid over a domain.
///
/// Every node inside the open domain is an unknown. Its four legs record the
/// fraction `θ ∈ (0, 1]` of the spacing after which the axis ray meets the
/// boundary; `θ = 1` means the neighbor node itself is on or inside the domain.
#[derive(Clone, Debug)]
pub struct GridMask {
    domain: Domain,
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    kinds: Vec<NodeKind>,
    legs: Vec<[f64; 4]>,
    unknown: Vec<Option<usize>>,
    nodes: Vec<usize>,
}

impl GridMask {
    /// Classifies the lattice `h·Z^2` over the domain. Nodes within `1e-6 h`
    /// of the boundary are treated as lying on it.
    pub fn build(domain: &Domain, h: f64) -> Result<Self> {
        domain.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(TorsionError::InvalidParameter(format!("grid spacing {h}")));
        }
        let inradius = domain.inradius();
        if h > 0.25 * inradius {
            return Err(TorsionError::GridTooCoarse(format!(
                "spacing {h} exceeds a quarter of the inradius {inradius}"
            )));
        }
        let (lo, hi) = domain.bounding_box();
        let i0 = (lo.x / h).floor() as i64 - GHOST_LAYERS;
        let j0 = (lo.y / h).floor() as i64 - GHOST_LAYERS;
        let i1 = (hi.x / h).ceil() as i64 + GHOST_LAYERS;
        let j1 = (hi.y / h).ceil() as i64 + GHOST_LAYERS;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        let origin = Point::new(i0 as f64 * h, j0 as f64 * h);

        let inside: Vec<bool> = (0..nx * ny)
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                let p = origin + Point::new(i as f64 * h, j as f64 * h);
                domain.contains(p) && domain.boundary_distance(p) > SNAP * h
            })
            .collect();

        let mut kinds = vec![NodeKind::Exterior; nx * ny];
        let mut legs = vec![[0.0; 4]; nx * ny];
        let mut unknown = vec![None; nx * ny];
        let mut nodes = Vec::new();
        for k in 0..nx * ny {
            if !inside[k] {
                continue;
            }
            let (i, j) = ((k % nx) as i64, (k / nx) as i64);
            let p = origin + Point::new(i as f64 * h, j as f64 * h);
            let mut all_inside = true;
            for (d, (di, dj)) in DIRECTIONS.iter().enumerate() {
                let nk = ((j + dj) as usize) * nx + (i + di) as usize;
                if inside[nk] {
                    legs[k][d] = 1.0;
                } else {
                    all_inside = false;
                    let dir = Point::new(*di as f64, *dj as f64);
                    legs[k][d] = domain
                        .ray_crossing(p, dir, h)
                        .map_or(1.0, |t| (t / h).clamp(MIN_THETA, 1.0));
                }
            }
            kinds[k] = if all_inside {
                NodeKind::Interior
            } else {
                NodeKind::BoundaryAdjacent
            };
            unknown[k] = Some(nodes.len());
            nodes.push(k);
        }

        let interior = kinds.iter().filter(|k| **k == NodeKind::Interior).count();
        if interior < 16 {
            return Err(TorsionError::GridTooCoarse(format!(
                "only {interior} interior nodes"
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            origin,
            h,
            nx,
            ny,
            kinds,
            legs,
            unknown,
            nodes,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }
    pub fn position(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        self.origin + Point::new(i as f64 * self.h, j as f64 * self.h)
    }
    pub fn kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }
    /// Fractional leg lengths `[east, west, north, south]`.
    pub fn legs(&self, k: usize) -> [f64; 4] {
        self.legs[k]
    }
    /// Unknown index of a node inside the domain.
    pub fn unknown(&self, k: usize) -> Option<usize> {
        self.unknown[k]
    }
    /// Node ids of all unknowns, in unknown order.
    pub fn unknown_nodes(&self) -> &[usize] {
        &self.nodes
    }
    pub fn unknown_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn interior_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == NodeKind::Interior)
            .count()
    }

    /// Neighbor node id in direction `d` (stencil order), if on the lattice.
    pub fn neighbor(&self, k: usize, d: usize) -> Option<usize> {
        let (i, j) = self.coords(k);
        let (di, dj) = DIRECTIONS[d];
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        (ni >= 0 && nj >= 0 && (ni as usize) < self.nx && (nj as usize) < self.ny)
            .then(|| self.index(ni as usize, nj as usize))
    }

    /// Area of the cell `[x ± h/2] × [y ± h/2]` of node `k` inside the domain.
    /// Cells of interior nodes are fully inside (convexity); other cells are
    /// estimated on a 16×16 midpoint sub-lattice.
    pub fn clipped_cell_area(&self, k: usize) -> f64 {
        let h2 = self.h * self.h;
        if self.kinds[k] == NodeKind::Interior && self.domain.is_convex() {
            return h2;
        }
        const SUB: usize = 16;
        let p = self.position(k);
        let step = self.h / SUB as f64;
        let mut count = 0usize;
        for a in 0..SUB {
            for b in 0..SUB {
                let q = p + Point::new(
                    -0.5 * self.h + (a as f64 + 0.5) * step,
                    -0.5 * self.h + (b as f64 + 0.5) * step,
                );
                if self.domain.contains(q) {
                    count += 1;
                }
            }
        }
        h2 * count as f64 / (SUB * SUB) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coarse_grid_rejected() {
        let err = GridMask::build(&Domain::unit_disk(), 0.5).unwrap_err();
        assert!(matches!(err, TorsionError::GridTooCoarse(_)));
    }

    #[test]
    fn disk_node_count_matches_membership_count() {
        let h = 1.0 / 64.0;
        let mask = GridMask::build(&Domain::unit_disk(), h).unwrap();
        // oracle: exact membership test over the lattice covering the disk
        let n = (1.0 / h) as i64 + 1;
        let mut count = 0;
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                if x * x + y * y < 1.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(mask.unknown_count(), count);
        let expected = PI / (h * h);
        assert!((mask.unknown_count() as f64 - expected).abs() / expected < 0.02);
    }

    #[test]
    fn aligned_square_has_unit_legs() {
        let mask = GridMask::build(&Domain::square(1.0), 1.0 / 16.0).unwrap();
        for &k in mask.unknown_nodes() {
            assert!(mask.legs(k).iter().all(|t| *t == 1.0));
        }
        assert_eq!(mask.unknown_count(), 31 * 31);
    }

    #[test]
    fn mask_invariants() {
        for domain in [
            Domain::unit_disk(),
            Domain::ellipse(Point::zeros(), [1.5, 0.5], 1.0),
            Domain::paper_triangle(),
        ] {
            let mask = GridMask::build(&domain, 1.0 / 32.0).unwrap();
            for k in 0..mask.node_count() {
                match mask.kind(k) {
                    NodeKind::Interior => {
                        assert!(domain.contains(mask.position(k)));
                        for d in 0..4 {
                            let nb = mask.neighbor(k, d).unwrap();
                            assert_ne!(mask.kind(nb), NodeKind::Exterior);
                        }
                    }
                    NodeKind::BoundaryAdjacent => {
                        assert!(domain.contains(mask.position(k)));
                        assert!(mask.legs(k).iter().all(|t| *t > 0.0 && *t <= 1.0));
                    }
                    NodeKind::Exterior => assert!(!domain.contains(mask.position(k))),
                }
            }
        }
    }

    #[test]
    fn clipped_areas_sum_to_domain_area() {
        let domain = Domain::unit_disk();
        let mask = GridMask::build(&domain, 1.0 / 32.0).unwrap();
        // cells of exterior nodes may also overlap the disk
        let total: f64 = (0..mask.node_count())
            .map(|k| mask.clipped_cell_area(k))
            .sum();
        assert!((total - PI).abs() < 2e-3);
    }
}
