use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Point, Result, TorsionError};

/// Tolerance on `Σ a_i = n` for ellipse coefficients.
pub const COEFFICIENT_SUM_TOL: f64 = 1e-12;

/// A bounded planar region.
///
/// Serialized as a tagged JSON object, e.g.
/// `{"type": "ellipse", "center": [0, 0], "coefficients": [1.5, 0.5], "radius": 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// `{x : a_1 (x_1 - c_1)^2 + a_2 (x_2 - c_2)^2 < R^2}` with `a_1 + a_2 = 2`.
    Ellipse {
        center: [f64; 2],
        coefficients: [f64; 2],
        radius: f64,
    },
    /// Convex polygon, vertices counter-clockwise.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Closed polyline sampled from a level set; convexity is not assumed.
    LevelSet {
        vertices: Vec<[f64; 2]>,
    },
}

/// A point on the boundary together with its outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySample {
    pub point: Point,
    pub normal: Point,
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Self {
        Domain::Disk {
            center: [center.x, center.y],
            radius,
        }
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::zeros(), 1.0)
    }

    pub fn ellipse(center: Point, coefficients: [f64; 2], radius: f64) -> Self {
        Domain::Ellipse {
            center: [center.x, center.y],
            coefficients,
            radius,
        }
    }

    pub fn polygon(vertices: &[Point]) -> Self {
        Domain::Polygon {
            vertices: vertices.iter().map(|v| [v.x, v.y]).collect(),
        }
    }

    pub fn level_set(vertices: &[Point]) -> Self {
        Domain::LevelSet {
            vertices: vertices.iter().map(|v| [v.x, v.y]).collect(),
        }
    }

    /// The square `(-s, s)^2`.
    pub fn square(half_side: f64) -> Self {
        let s = half_side;
        Self::polygon(&[
            Point::new(-s, -s),
            Point::new(s, -s),
            Point::new(s, s),
            Point::new(-s, s),
        ])
    }

    /// Equilateral triangle with vertices `(-2, 0)`, `(1, √3)`, `(1, -√3)`.
    pub fn paper_triangle() -> Self {
        let s = 3f64.sqrt();
        Self::polygon(&[
            Point::new(-2.0, 0.0),
            Point::new(1.0, -s),
            Point::new(1.0, s),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TorsionError::InvalidDomain(m.to_string()));
        match self {
            Domain::Disk { radius, center } => {
                if !(*radius > 0.0) || !radius.is_finite() || !center.iter().all(|c| c.is_finite())
                {
                    return bad("disk radius must be positive and finite");
                }
            }
            Domain::Ellipse {
                coefficients,
                radius,
                ..
            } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return bad("ellipse radius must be positive");
                }
                if coefficients.iter().any(|a| !(*a > 0.0)) {
                    return bad("ellipse coefficients must be positive");
                }
                let sum: f64 = coefficients.iter().sum();
                if (sum - 2.0).abs() > COEFFICIENT_SUM_TOL {
                    return Err(TorsionError::CoefficientSum { sum, dim: 2 });
                }
            }
            Domain::Polygon { vertices } => {
                let v = self.vertex_points();
                if vertices.len() < 3 {
                    return bad("polygon needs at least 3 vertices");
                }
                if signed_area(&v) <= 0.0 {
                    return bad("polygon vertices must be counter-clockwise");
                }
                if !is_convex_polyline(&v) {
                    return bad("polygon is not convex");
                }
            }
            Domain::LevelSet { vertices } => {
                if vertices.len() < 3 {
                    return bad("level set needs at least 3 vertices");
                }
                if signed_area(&self.vertex_points()).abs() == 0.0 {
                    return bad("level set polyline has zero area");
                }
            }
        }
        Ok(())
    }

    fn vertex_points(&self) -> Vec<Point> {
        match self {
            Domain::Polygon { vertices } | Domain::LevelSet { vertices } => {
                vertices.iter().copied().map(pt).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Counter-clockwise boundary polyline for polygonal domains.
    pub fn vertices(&self) -> Option<Vec<Point>> {
        match self {
            Domain::Polygon { .. } => Some(self.vertex_points()),
            Domain::LevelSet { .. } => {
                let mut v = self.vertex_points();
                if signed_area(&v) < 0.0 {
                    v.reverse();
                }
                Some(v)
            }
            _ => None,
        }
    }

    /// Convexity flag; computed for sampled level sets.
    pub fn is_convex(&self) -> bool {
        match self {
            Domain::Disk { .. } | Domain::Ellipse { .. } => true,
            _ => self
                .vertices()
                .map(|v| is_convex_polyline(&v))
                .unwrap_or(false),
        }
    }

    /// True iff `x` lies in the open region.
    pub fn contains(&self, x: Point) -> bool {
        match self {
            Domain::Disk { center, radius } => (x - pt(*center)).norm_squared() < radius * radius,
            Domain::Ellipse {
                center,
                coefficients,
                radius,
            } => {
                let q = x - pt(*center);
                coefficients[0] * q.x * q.x + coefficients[1] * q.y * q.y < radius * radius
            }
            Domain::Polygon { .. } => {
                let v = self.vertex_points();
                let n = v.len();
                (0..n).all(|i| cross(v[(i + 1) % n] - v[i], x - v[i]) > 0.0)
            }
            Domain::LevelSet { .. } => {
                let v = self.vertex_points();
                point_in_polygon(&v, x) && polyline_distance(&v, x) > 0.0
            }
        }
    }

    /// Distance from the interior point `x` to the boundary.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        match self {
            Domain::Disk { center, radius } => (radius - (x - pt(*center)).norm()).abs(),
            Domain::Ellipse {
                center,
                coefficients,
                radius,
            } => {
                let q = x - pt(*center);
                let e0 = radius / coefficients[0].sqrt();
                let e1 = radius / coefficients[1].sqrt();
                if e0 >= e1 {
                    distance_point_ellipse(e0, e1, q.x.abs(), q.y.abs())
                } else {
                    distance_point_ellipse(e1, e0, q.y.abs(), q.x.abs())
                }
            }
            Domain::Polygon { .. } | Domain::LevelSet { .. } => {
                polyline_distance(&self.vertex_points(), x)
            }
        }
    }

    /// Distance `t ∈ (0, max_len]` along the unit direction `dir` from the
    /// interior point `x` to the first boundary crossing.
    pub fn ray_crossing(&self, x: Point, dir: Point, max_len: f64) -> Option<f64> {
        let t = match self {
            Domain::Disk { center, radius } => {
                let q = x - pt(*center);
                let b = q.dot(&dir);
                let c = q.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                root_positive(dir.norm_squared(), 2.0 * b, c)
            }
            Domain::Ellipse {
                center,
                coefficients,
                radius,
            } => {
                let q = x - pt(*center);
                let [a1, a2] = *coefficients;
                let a = a1 * dir.x * dir.x + a2 * dir.y * dir.y;
                let b = 2.0 * (a1 * q.x * dir.x + a2 * q.y * dir.y);
                let c = a1 * q.x * q.x + a2 * q.y * q.y - radius * radius;
                root_positive(a, b, c)
            }
            Domain::Polygon { .. } | Domain::LevelSet { .. } => {
                let v = self.vertex_points();
                let n = v.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (p, q) = (v[i], v[(i + 1) % n]);
                    let e = q - p;
                    let denom = cross(dir, e);
                    if denom.abs() < 1e-300 {
                        continue;
                    }
                    let w = p - x;
                    let t = cross(w, e) / denom;
                    let s = cross(w, dir) / denom;
                    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                        best = Some(best.map_or(t, |b: f64| b.min(t)));
                    }
                }
                best
            }
        }?;
        (t > 0.0 && t <= max_len * (1.0 + 1e-12)).then_some(t.min(max_len))
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Domain::Disk { center, radius } => {
                let c = pt(*center);
                (c.add_scalar(-radius), c.add_scalar(*radius))
            }
            Domain::Ellipse {
                center,
                coefficients,
                radius,
            } => {
                let c = pt(*center);
                let e = Point::new(
                    radius / coefficients[0].sqrt(),
                    radius / coefficients[1].sqrt(),
                );
                (c - e, c + e)
            }
            _ => {
                let v = self.vertex_points();
                let mut lo = v[0];
                let mut hi = v[0];
                for p in &v {
                    lo = lo.inf(p);
                    hi = hi.sup(p);
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => 2.0 * radius,
            Domain::Ellipse {
                coefficients,
                radius,
                ..
            } => 2.0 * radius / coefficients[0].min(coefficients[1]).sqrt(),
            _ => {
                let v = self.vertex_points();
                let mut d: f64 = 0.0;
                for (i, p) in v.iter().enumerate() {
                    for q in &v[i + 1..] {
                        d = d.max((p - q).norm());
                    }
                }
                d
            }
        }
    }

    /// Radius of the largest inscribed disk (lattice estimate for polygons).
    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => *radius,
            Domain::Ellipse {
                coefficients,
                radius,
                ..
            } => radius / coefficients[0].max(coefficients[1]).sqrt(),
            _ => {
                let (lo, hi) = self.bounding_box();
                let n = 96;
                let mut best: f64 = 0.0;
                for i in 0..=n {
                    for j in 0..=n {
                        let p = Point::new(
                            lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                            lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                        );
                        if self.contains(p) {
                            best = best.max(self.boundary_distance(p));
                        }
                    }
                }
                best
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => PI * radius * radius,
            Domain::Ellipse {
                coefficients,
                radius,
                ..
            } => PI * radius * radius / (coefficients[0] * coefficients[1]).sqrt(),
            _ => signed_area(&self.vertex_points()).abs(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => 2.0 * PI * radius,
            Domain::Ellipse {
                coefficients,
                radius,
                ..
            } => {
                // periodic trapezoid rule converges geometrically
                let (e0, e1) = (
                    radius / coefficients[0].sqrt(),
                    radius / coefficients[1].sqrt(),
                );
                let n = 4096;
                (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / n as f64;
                        (e0 * t.sin()).hypot(e1 * t.cos())
                    })
                    .sum::<f64>()
                    * 2.0
                    * PI
                    / n as f64
            }
            _ => {
                let v = self.vertex_points();
                let n = v.len();
                (0..n).map(|i| (v[(i + 1) % n] - v[i]).norm()).sum()
            }
        }
    }

    /// `n` boundary points with outward normals. Polygon samples are spaced
    /// evenly in arc length and avoid the vertices.
    pub fn boundary_samples(&self, n: usize) -> Vec<BoundarySample> {
        match self {
            Domain::Disk { center, radius } => (0..n)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                    let normal = Point::new(t.cos(), t.sin());
                    BoundarySample {
                        point: pt(*center) + normal * *radius,
                        normal,
                    }
                })
                .collect(),
            Domain::Ellipse {
                center,
                coefficients,
                radius,
            } => {
                let (e0, e1) = (
                    radius / coefficients[0].sqrt(),
                    radius / coefficients[1].sqrt(),
                );
                (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                        let q = Point::new(e0 * t.cos(), e1 * t.sin());
                        let normal =
                            Point::new(coefficients[0] * q.x, coefficients[1] * q.y).normalize();
                        BoundarySample {
                            point: pt(*center) + q,
                            normal,
                        }
                    })
                    .collect()
            }
            _ => {
                let v = self.vertices().unwrap_or_default();
                let m = v.len();
                let total = self.perimeter();
                let mut out = Vec::with_capacity(n);
                let mut edge = 0;
                let mut start = 0.0;
                for i in 0..n {
                    let s = total * (i as f64 + 0.5) / n as f64;
                    loop {
                        let len = (v[(edge + 1) % m] - v[edge]).norm();
                        if s <= start + len || edge + 1 == m {
                            break;
                        }
                        start += len;
                        edge += 1;
                    }
                    let e = v[(edge + 1) % m] - v[edge];
                    let len = e.norm();
                    let dir = e / len;
                    out.push(BoundarySample {
                        point: v[edge] + dir * (s - start).min(len),
                        normal: Point::new(dir.y, -dir.x),
                    });
                }
                out
            }
        }
    }
}

/// Smallest positive root of `a t^2 + b t + c`.
fn root_positive(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // stable form
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [q / a, if q != 0.0 { c / q } else { f64::NAN }];
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Greater));
    roots.into_iter().find(|t| *t > 0.0)
}

/// Signed shoelace area; positive for counter-clockwise order.
pub fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

/// Convexity of a closed polyline via cross-product signs, with tolerance
/// `1e-12 * scale^2` where `scale` is the bounding-box diagonal.
pub fn is_convex_polyline(v: &[Point]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let mut lo = v[0];
    let mut hi = v[0];
    for p in v {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let tol = 1e-12 * (hi - lo).norm_squared();
    let orient = signed_area(v).signum();
    (0..n).all(|i| {
        let a = v[(i + 1) % n] - v[i];
        let b = v[(i + 2) % n] - v[(i + 1) % n];
        orient * cross(a, b) >= -tol
    })
}

fn point_in_polygon(v: &[Point], x: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > x.y) != (b.y > x.y) {
            let xi = a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if x.x < xi {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn polyline_distance(v: &[Point], x: Point) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let e = b - a;
            let t = ((x - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            (a + e * t - x).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `(y0, y1)` (first quadrant) to the ellipse with semi-axes
/// `e0 >= e1`, by bisection on the stationarity root.
fn distance_point_ellipse(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1).powi(2);
            let sbar = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (sbar + r0);
            let x1 = y1 / (sbar + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}
