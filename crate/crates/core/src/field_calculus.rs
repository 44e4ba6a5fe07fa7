//! Uniform evaluation of analytic and grid-backed fields.
//!
//! Grid fields are interpolated by bicubic Hermite patches whose node
//! derivatives `f_x`, `f_y`, `f_xy` come from fourth-order central differences
//! of the extended node values. The patches are C¹ and reproduce node values
//! exactly; second derivatives are accurate to `O(h²)` away from the boundary.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::closed_forms::{Jet2, SmoothField};
use crate::geometry::Domain;
use crate::solver::{GridField, SolveResult};
use crate::{Point, Result, TorsionError};

/// Grid-backed jets need this many spacings of clearance from the boundary.
pub const GRID_JET_MARGIN: f64 = 2.0;

/// Bicubic Hermite interpolant of a grid field.
#[derive(Clone, Debug)]
pub struct GridInterpolant {
    field: GridField,
    /// `[f, f_x, f_y, f_xy]` per node, `NaN` where unavailable.
    data: Vec<[f64; 4]>,
    argmax: Point,
    max_value: f64,
}

impl GridInterpolant {
    /// Builds the interpolant and locates the interior maximum, starting the
    /// search from the largest node value.
    pub fn new(field: GridField) -> Result<Self> {
        let mask = field.mask();
        let start = mask
            .unknown_nodes()
            .iter()
            .copied()
            .max_by(|&a, &b| field.values()[a].total_cmp(&field.values()[b]))
            .map(|k| mask.position(k))
            .ok_or_else(|| TorsionError::SingularSystem("field has no nodes".into()))?;
        Self::with_start(field, start)
    }

    /// Builds the interpolant of a solve, polishing the solver's argmax.
    pub fn from_solve(result: &SolveResult) -> Result<Self> {
        Self::with_start(result.field.clone(), result.argmax)
    }

    fn with_start(field: GridField, start: Point) -> Result<Self> {
        let data = node_data(&field);
        let mut out = Self {
            field,
            data,
            argmax: start,
            max_value: f64::NAN,
        };
        let (p, m) = out.polish_max(start)?;
        out.argmax = p;
        out.max_value = m;
        Ok(out)
    }

    pub fn field(&self) -> &GridField {
        &self.field
    }

    pub fn spacing(&self) -> f64 {
        self.field.mask().spacing()
    }

    pub fn domain(&self) -> &Domain {
        self.field.mask().domain()
    }

    pub fn argmax(&self) -> Point {
        self.argmax
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// Raw patch evaluation with no domain checks; `None` when a corner of
    /// the containing cell carries no data.
    pub fn patch_jet(&self, p: Point) -> Option<Jet2> {
        let mask = self.field.mask();
        let h = mask.spacing();
        let (nx, ny) = mask.dims();
        let q = (p - mask.origin()) / h;
        let (fi, fj) = (q.x.floor(), q.y.floor());
        if fi < 0.0 || fj < 0.0 || fi as usize + 1 >= nx || fj as usize + 1 >= ny {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        let (t, s) = (q.x - fi, q.y - fj);
        let bt = hermite(t);
        let bs = hermite(s);
        let mut value = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        let mut hxx = 0.0;
        let mut hxy = 0.0;
        let mut hyy = 0.0;
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let d = self.data[mask.index(i + a, j + b)];
            if d.iter().any(|v| !v.is_finite()) {
                return None;
            }
            // scaled corner data f, h f_x, h f_y, h² f_xy; basis a for values, 2 + a for slopes
            let coef = [d[0], h * d[1], h * d[2], h * h * d[3]];
            let pairs = [(a, b), (2 + a, b), (a, 2 + b), (2 + a, 2 + b)];
            for (c, (ta, sb)) in coef.iter().zip(pairs) {
                let (u0, u1, u2) = bt[ta];
                let (w0, w1, w2) = bs[sb];
                value += c * u0 * w0;
                gx += c * u1 * w0;
                gy += c * u0 * w1;
                hxx += c * u2 * w0;
                hxy += c * u1 * w1;
                hyy += c * u0 * w2;
            }
        }
        Some(Jet2 {
            value,
            gradient: Point::new(gx, gy) / h,
            hessian: Matrix2::new(hxx, hxy, hxy, hyy) / (h * h),
        })
    }

    /// Newton iterations on the gradient of the interpolant.
    fn polish_max(&self, start: Point) -> Result<(Point, f64)> {
        let h = self.spacing();
        let domain = self.domain();
        let mut p = start;
        for _ in 0..30 {
            let jet = self.patch_jet(p).ok_or(TorsionError::ArgmaxOnBoundary)?;
            let Some(inv) = jet.hessian.try_inverse() else {
                break;
            };
            let mut step = -(inv * jet.gradient);
            if step.norm() > h {
                step *= h / step.norm();
            }
            p += step;
            if step.norm() < 1e-14 * h {
                break;
            }
        }
        if !domain.contains(p) || domain.boundary_distance(p) < GRID_JET_MARGIN * h {
            return Err(TorsionError::ArgmaxOnBoundary);
        }
        let jet = self.patch_jet(p).ok_or(TorsionError::ArgmaxOnBoundary)?;
        if !(jet.hessian.determinant() > 0.0 && jet.hessian[(0, 0)] < 0.0) {
            return Err(TorsionError::ArgmaxOnBoundary);
        }
        Ok((p, jet.value))
    }
}

/// Cubic Hermite basis on `[0, 1]` with first and second derivatives, ordered
/// `h00, h01, h10, h11` (values at 0 and 1, then slopes at 0 and 1).
fn hermite(t: f64) -> [(f64, f64, f64); 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (
            2.0 * t3 - 3.0 * t2 + 1.0,
            6.0 * t2 - 6.0 * t,
            12.0 * t - 6.0,
        ),
        (-2.0 * t3 + 3.0 * t2, -6.0 * t2 + 6.0 * t, -12.0 * t + 6.0),
        (t3 - 2.0 * t2 + t, 3.0 * t2 - 4.0 * t + 1.0, 6.0 * t - 4.0),
        (t3 - t2, 3.0 * t2 - 2.0 * t, 6.0 * t - 2.0),
    ]
}

/// Central-difference weights on offsets `-2..=2`, fourth and second order.
const D4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [0.0, -0.5, 0.0, 0.5, 0.0];

fn node_data(field: &GridField) -> Vec<[f64; 4]> {
    let mask = field.mask();
    let h = mask.spacing();
    let (nx, ny) = mask.dims();
    let e = field.extended_values();
    let at = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
            f64::NAN
        } else {
            e[mask.index(i as usize, j as usize)]
        }
    };
    let mut out = vec![[f64::NAN; 4]; mask.node_count()];
    for (k, slot) in out.iter_mut().enumerate() {
        if !e[k].is_finite() {
            continue;
        }
        let (i, j) = mask.coords(k);
        let (i, j) = (i as i64, j as i64);
        let apply = |w: &[f64; 5], f: &dyn Fn(i64) -> f64| -> f64 {
            (0..5)
                .filter(|&m| w[m] != 0.0)
                .map(|m| w[m] * f(m as i64 - 2))
                .sum()
        };
        let first = |f: &dyn Fn(i64) -> f64| -> f64 {
            let v = apply(&D4, f);
            if v.is_finite() {
                v
            } else {
                apply(&D2, f)
            }
        };
        let fx = first(&|m| at(i + m, j)) / h;
        let fy = first(&|m| at(i, j + m)) / h;
        let fxy = first(&|m| first(&|n| at(i + m, j + n))) / (h * h);
        *slot = [e[k], fx, fy, fxy];
    }
    out
}

/// A planar field with jets: analytic or interpolated from a grid.
#[derive(Clone, Debug)]
pub enum EvaluableField {
    Smooth(SmoothField),
    Grid(Arc<GridInterpolant>),
}

impl From<SmoothField> for EvaluableField {
    fn from(f: SmoothField) -> Self {
        EvaluableField::Smooth(f)
    }
}

impl From<GridInterpolant> for EvaluableField {
    fn from(g: GridInterpolant) -> Self {
        EvaluableField::Grid(Arc::new(g))
    }
}

impl EvaluableField {
    /// Interpolated field of a solve.
    pub fn from_solve(result: &SolveResult) -> Result<Self> {
        Ok(GridInterpolant::from_solve(result)?.into())
    }

    pub fn domain(&self) -> Domain {
        match self {
            EvaluableField::Smooth(f) => f.natural_domain().expect("analysis fields are planar"),
            EvaluableField::Grid(g) => g.domain().clone(),
        }
    }

    /// Grid spacing, if grid-backed.
    pub fn spacing(&self) -> Option<f64> {
        match self {
            EvaluableField::Smooth(_) => None,
            EvaluableField::Grid(g) => Some(g.spacing()),
        }
    }

    /// Clearance from the boundary required by [`eval_jet`].
    pub fn jet_margin(&self) -> f64 {
        self.spacing().map_or(0.0, |h| GRID_JET_MARGIN * h)
    }

    /// Interior maximum point and value.
    pub fn max(&self) -> (Point, f64) {
        match self {
            EvaluableField::Smooth(f) => {
                let (p, m) = f.max_point();
                (Point::new(p[0], p[1]), m)
            }
            EvaluableField::Grid(g) => (g.argmax(), g.max_value()),
        }
    }

    /// Field value anywhere inside the domain, boundary layer included.
    pub fn value(&self, x: Point) -> Result<f64> {
        match self {
            EvaluableField::Smooth(f) => {
                check_inside(&self.domain(), x)?;
                Ok(f.jet2(x).value)
            }
            EvaluableField::Grid(g) => {
                check_inside(g.domain(), x)?;
                g.patch_jet(x)
                    .map(|j| j.value)
                    .ok_or(TorsionError::OutOfDomain(x.x, x.y))
            }
        }
    }
}

fn check_inside(domain: &Domain, x: Point) -> Result<()> {
    if x.iter().all(|c| c.is_finite()) && domain.contains(x) {
        Ok(())
    } else {
        Err(TorsionError::OutOfDomain(x.x, x.y))
    }
}

/// Value, gradient and Hessian at `x`.
pub fn eval_jet(f: &EvaluableField, x: Point) -> Result<Jet2> {
    match f {
        EvaluableField::Smooth(s) => {
            check_inside(&f.domain(), x)?;
            Ok(s.jet2(x))
        }
        EvaluableField::Grid(g) => {
            let domain = g.domain();
            check_inside(domain, x)?;
            let margin = GRID_JET_MARGIN * g.spacing();
            if domain.boundary_distance(x) < margin * (1.0 - 1e-12) {
                return Err(TorsionError::TooCloseToBoundary {
                    x: x.x,
                    y: x.y,
                    margin,
                });
            }
            g.patch_jet(x).ok_or(TorsionError::OutOfDomain(x.x, x.y))
        }
    }
}

/// Derivatives of `v(r) = M - u(base + r ξ)` along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialJet {
    pub v: f64,
    pub v_r: f64,
    pub v_rr: f64,
}

/// Radial jet of `M - u` along `base + r ξ`, with `M = u(base)`.
pub fn radial_jet(f: &EvaluableField, base: Point, xi: Point, r: f64) -> Result<RadialJet> {
    let norm = xi.norm();
    if !(norm > 0.0) || !r.is_finite() {
        return Err(TorsionError::InvalidParameter(
            "direction must be nonzero".into(),
        ));
    }
    let xi = xi / norm;
    let top = eval_jet(f, base)?.value;
    let jet = eval_jet(f, base + xi * r)?;
    Ok(RadialJet {
        v: top - jet.value,
        v_r: -jet.gradient.dot(&xi),
        v_rr: -xi.dot(&(jet.hessian * xi)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{ball_torsion, triangle_torsion};
    use crate::geometry::GridMask;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_basis_partitions_unity() {
        for t in [0.0, 0.3, 0.7, 1.0] {
            let b = hermite(t);
            assert_abs_diff_eq!(b[0].0 + b[1].0, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b[0].1 + b[1].1, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cubic_fields_are_reproduced() {
        let mask = Arc::new(GridMask::build(&Domain::square(1.0), 1.0 / 16.0).unwrap());
        let cubic =
            |p: Point| 0.3 - p.x * p.x - p.y * p.y + 0.2 * p.x * p.x * p.y - 0.1 * p.y.powi(3);
        let field = GridField::sample(mask, cubic);
        let g = GridInterpolant::new(field).unwrap();
        let p = Point::new(0.123, -0.271);
        let jet = g.patch_jet(p).unwrap();
        assert_abs_diff_eq!(jet.value, cubic(p), epsilon = 1e-12);
        assert_abs_diff_eq!(jet.hessian[(0, 1)], 0.4 * p.x, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.hessian[(1, 1)], -2.0 - 0.6 * p.y, epsilon = 1e-9);
        assert!(g.argmax().norm() < 1e-2);
    }

    #[test]
    fn radial_jet_of_disk() {
        let f: EvaluableField = ball_torsion(&[0.0, 0.0], 1.0).unwrap().into();
        let j = radial_jet(&f, Point::zeros(), Point::new(0.6, 0.8), 0.5).unwrap();
        assert_abs_diff_eq!(j.v, 0.0625, epsilon = 1e-15);
        assert_abs_diff_eq!(j.v_r, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(j.v_rr, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn radial_jet_of_triangle() {
        let f: EvaluableField = triangle_torsion().into();
        let t = std::f64::consts::FRAC_PI_3;
        let j = radial_jet(&f, Point::zeros(), Point::new(t.cos(), t.sin()), 0.2).unwrap();
        assert_abs_diff_eq!(j.v, 0.04 / 4.0 - 0.008 / 12.0, epsilon = 1e-14);
    }
}
