use std::collections::BTreeMap;

use super::domain::{is_convex_polyline, signed_area};
use crate::{Point, Result, TorsionError};

/// Area and perimeter of a closed polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolygonMetrics {
    pub area: f64,
    pub perimeter: f64,
}

/// Shoelace area and Euclidean perimeter of a simple closed polyline.
pub fn polygon_metrics(poly: &[Point]) -> Result<PolygonMetrics> {
    if poly.len() < 3 {
        return Err(TorsionError::DegeneratePolyline(format!(
            "{} vertices",
            poly.len()
        )));
    }
    let n = poly.len();
    let perimeter: f64 = (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).sum();
    let area = signed_area(poly).abs();
    if !(area > 1e-14 * perimeter * perimeter) {
        return Err(TorsionError::DegeneratePolyline("zero area".into()));
    }
    Ok(PolygonMetrics { area, perimeter })
}

/// Scalar values on a uniform lattice; `NaN` marks undefined nodes.
#[derive(Clone, Debug)]
pub struct NodeGrid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl NodeGrid {
    /// Samples `f` on the lattice covering `[lo, hi]` with spacing `h`.
    pub fn sample(lo: Point, hi: Point, h: f64, f: impl Fn(Point) -> f64) -> Self {
        let nx = ((hi.x - lo.x) / h).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / h).ceil() as usize + 1;
        let values = (0..nx * ny)
            .map(|k| f(lo + Point::new((k % nx) as f64 * h, (k / nx) as f64 * h)))
            .collect();
        Self {
            origin: lo,
            h,
            nx,
            ny,
            values,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    fn pos(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new(i as f64 * self.h, j as f64 * self.h)
    }
}

/// Edge identifier: `(orientation, i, j)` where orientation 0 is the
/// horizontal edge from `(i, j)` to `(i+1, j)` and 1 the vertical edge from
/// `(i, j)` to `(i, j+1)`.
type EdgeId = (u8, usize, usize);

/// Extracts the closed curve `{f = c}` by marching squares.
///
/// Crossings are placed by linear interpolation along cell edges; saddle cells
/// are resolved by the cell-centre average. When several loops exist the one
/// enclosing the largest area is returned. Output is counter-clockwise.
pub fn marching_level_set(grid: &NodeGrid, c: f64) -> Result<Vec<Point>> {
    let max = grid
        .values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(c < max) {
        return Err(TorsionError::EmptyLevelSet(c));
    }

    let mut links: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let corners = [
                grid.at(i, j),
                grid.at(i + 1, j),
                grid.at(i + 1, j + 1),
                grid.at(i, j + 1),
            ];
            let above: Vec<bool> = corners.iter().map(|v| *v > c).collect();
            let defined = corners.iter().all(|v| v.is_finite());
            let any_above = corners.iter().any(|v| v.is_finite() && *v > c);
            let any_below = corners.iter().any(|v| v.is_finite() && *v <= c);
            if !defined {
                if any_above {
                    return Err(TorsionError::LevelSetTouchesBoundary(c));
                }
                continue;
            }
            if !(any_above && any_below) {
                continue;
            }
            if i == 0 || j == 0 || i + 2 == grid.nx || j + 2 == grid.ny {
                return Err(TorsionError::LevelSetTouchesBoundary(c));
            }
            // edges in cyclic order: bottom, right, top, left
            let edges: [EdgeId; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let crossing = |e: usize| above[e] != above[(e + 1) % 4];
            let crossed: Vec<usize> = (0..4).filter(|e| crossing(*e)).collect();
            let pairs: Vec<(usize, usize)> = if crossed.len() == 2 {
                vec![(crossed[0], crossed[1])]
            } else {
                // saddle: corners 0 and 2 share a side
                let centre = corners.iter().sum::<f64>() / 4.0;
                if (centre > c) == above[0] {
                    // corners 0 and 2 connected through the centre
                    vec![(0, 3), (1, 2)]
                } else {
                    vec![(0, 1), (2, 3)]
                }
            };
            for (a, b) in pairs {
                links.entry(edges[a]).or_default().push(edges[b]);
                links.entry(edges[b]).or_default().push(edges[a]);
            }
        }
    }
    if links.is_empty() {
        return Err(TorsionError::EmptyLevelSet(c));
    }

    let point_on = |e: &EdgeId| -> Point {
        let (o, i, j) = *e;
        let (i1, j1) = if o == 0 { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (grid.at(i, j), grid.at(i1, j1));
        let t = (c - v0) / (v1 - v0);
        grid.pos(i, j) + (grid.pos(i1, j1) - grid.pos(i, j)) * t
    };

    let mut visited: BTreeMap<EdgeId, bool> = links.keys().map(|k| (*k, false)).collect();
    let mut best: Option<(f64, Vec<Point>)> = None;
    for start in links.keys() {
        if visited[start] {
            continue;
        }
        let mut loop_pts = Vec::new();
        let mut prev: Option<EdgeId> = None;
        let mut cur = *start;
        loop {
            visited.insert(cur, true);
            loop_pts.push(point_on(&cur));
            let next = links[&cur]
                .iter()
                .find(|e| Some(**e) != prev && !visited[*e])
                .copied();
            match next {
                Some(n) => {
                    prev = Some(cur);
                    cur = n;
                }
                None => break,
            }
        }
        if loop_pts.len() >= 3 {
            let area = signed_area(&loop_pts);
            if best.as_ref().is_none_or(|(a, _)| area.abs() > a.abs()) {
                best = Some((area, loop_pts));
            }
        }
    }
    let (area, mut pts) = best.ok_or(TorsionError::EmptyLevelSet(c))?;
    if area < 0.0 {
        pts.reverse();
    }
    dedup_close(&mut pts);
    Ok(pts)
}

/// Drops consecutive vertices closer than `1e-9` of the curve scale; these
/// arise when a crossing lands on a lattice node.
fn dedup_close(pts: &mut Vec<Point>) {
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let eps = 1e-9 * (hi - lo).norm();
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.iter() {
        if out.last().is_none_or(|q| (p - q).norm() > eps) {
            out.push(*p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= eps {
        out.pop();
    }
    *pts = out;
}

/// Convexity of an extracted curve up to a resolution `slack`: no vertex may
/// sit more than `slack` on the concave side of the chord joining its
/// neighbours, and the curve must turn exactly once. Marching squares places
/// crossings with an error of order `h²`, so `slack = h²/2` suits its output.
pub fn is_convex_curve(poly: &[Point], slack: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    if slack <= 0.0 {
        return is_convex_polyline(poly);
    }
    let orient = signed_area(poly).signum();
    let mut turning = 0.0;
    for i in 0..n {
        let (a, b, c) = (poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        let (u, v) = (b - a, c - b);
        let turn = orient * (u.x * v.y - u.y * v.x);
        let chord = (c - a).norm();
        if turn < 0.0 && chord > 0.0 && -turn / chord > slack {
            return false;
        }
        turning += (u.x * v.y - u.y * v.x).atan2(u.dot(&v));
    }
    (turning.abs() - std::f64::consts::TAU).abs() < 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_metrics() {
        let sq = [
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
        ];
        let m = polygon_metrics(&sq).unwrap();
        assert_eq!(m.area, 4.0);
        assert_eq!(m.perimeter, 8.0);
    }

    #[test]
    fn regular_polygon_metrics() {
        let n = 256;
        let poly: Vec<Point> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let m = polygon_metrics(&poly).unwrap();
        // closed forms for the inscribed n-gon
        let area = 0.5 * n as f64 * (2.0 * PI / n as f64).sin();
        let per = 2.0 * n as f64 * (PI / n as f64).sin();
        assert!((m.area - area).abs() < 1e-12 && (m.perimeter - per).abs() < 1e-12);
        assert!((m.area - PI).abs() < 1e-3 && (m.perimeter - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn triangle_metrics() {
        let s = 3f64.sqrt();
        let tri = [
            Point::new(-2.0, 0.0),
            Point::new(1.0, -s),
            Point::new(1.0, s),
        ];
        let m = polygon_metrics(&tri).unwrap();
        assert!((m.area - 3.0 * s).abs() < 1e-12);
        assert!((m.perimeter - 6.0 * s).abs() < 1e-12);
    }

    #[test]
    fn degenerate_polyline() {
        let line = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ];
        assert!(matches!(
            polygon_metrics(&line),
            Err(TorsionError::DegeneratePolyline(_))
        ));
    }

    fn paraboloid_grid(h: f64) -> NodeGrid {
        let lo = Point::new(-1.2, -1.2);
        NodeGrid::sample(lo, -lo, h, |p| (1.0 - p.norm_squared()) / 4.0)
    }

    #[test]
    fn circle_level_set() {
        let grid = paraboloid_grid(1.0 / 64.0);
        let curve = marching_level_set(&grid, 0.1875).unwrap();
        let m = polygon_metrics(&curve).unwrap();
        assert!((m.perimeter - PI).abs() / PI < 0.01);
        assert!(signed_area(&curve) > 0.0);
        assert!(is_convex_curve(&curve, 0.0));
        for p in &curve {
            assert!((p.norm() - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn level_set_errors() {
        let grid = paraboloid_grid(1.0 / 16.0);
        assert!(matches!(
            marching_level_set(&grid, 0.25),
            Err(TorsionError::EmptyLevelSet(_))
        ));
        // the circle r^2 = 1.8 leaves the sampling window
        assert!(matches!(
            marching_level_set(&grid, -0.2),
            Err(TorsionError::LevelSetTouchesBoundary(_))
        ));
    }
}
