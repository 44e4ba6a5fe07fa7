//! Torsion problem `Δu = -1`, `u = 0` on the boundary, on embedded grids.
//!
//! Rows use the symmetric fractional-leg discretization
//! `u_xx ≈ [(u_E - u_P)/(θ_E h) - (u_P - u_W)/(θ_W h)] / h`, in which a leg
//! that meets the boundary after `θh` carries the Dirichlet value 0. The
//! resulting matrix is a symmetric M-matrix and the scheme converges at
//! second order in the maximum norm.

mod extension;
mod sparse;

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::geometry::{GridMask, NodeKind};
use crate::{Point, Result, TorsionError};
use sparse::{pcg, Csr};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Discrete scalar field on a grid mask.
#[derive(Clone, Debug)]
pub struct GridField {
    mask: Arc<GridMask>,
    values: Vec<f64>,
    extended: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl GridField {
    /// Field from node-indexed values; only unknown nodes are read.
    pub fn from_values(mask: Arc<GridMask>, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mask.node_count());
        for (k, v) in values.iter_mut().enumerate() {
            if mask.unknown(k).is_none() {
                *v = 0.0;
            }
        }
        let extended = extension::extend(&mask, &values);
        Self {
            mask,
            values,
            extended,
            residual: 0.0,
            iterations: 0,
        }
    }

    /// Samples `f` at the unknown nodes of `mask`.
    pub fn sample(mask: Arc<GridMask>, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..mask.node_count())
            .map(|k| {
                if mask.unknown(k).is_some() {
                    f(mask.position(k))
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_values(mask, values)
    }

    pub fn mask(&self) -> &Arc<GridMask> {
        &self.mask
    }
    /// Node-indexed values; zero off the unknowns.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// Node-indexed values extended a few layers past the boundary; `NaN`
    /// where undefined.
    pub fn extended_values(&self) -> &[f64] {
        &self.extended
    }
    pub fn residual(&self) -> f64 {
        self.residual
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `x,y,value` rows for every node inside the domain.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for &k in self.mask.unknown_nodes() {
            let p = self.mask.position(k);
            let _ = writeln!(s, "{},{},{}", sig12(p.x), sig12(p.y), sig12(self.values[k]));
        }
        s
    }

    /// Central-difference gradient and Hessian at node `k` of the extended
    /// field, falling back to one-sided or zero terms where neighbors are
    /// undefined.
    fn node_derivatives(&self, k: usize) -> (Point, Matrix2<f64>) {
        let h = self.mask.spacing();
        let e = &self.extended;
        let (nx, ny) = self.mask.dims();
        let (i, j) = self.mask.coords(k);
        let at = |di: i64, dj: i64| -> f64 {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a as usize >= nx || b as usize >= ny {
                f64::NAN
            } else {
                e[self.mask.index(a as usize, b as usize)]
            }
        };
        let c = e[k];
        let mut g = [0.0; 2];
        let mut d2 = [0.0; 2];
        for (axis, (di, dj)) in [(1i64, 0i64), (0, 1)].into_iter().enumerate() {
            let (fp, fm) = (at(di, dj), at(-di, -dj));
            match (fp.is_finite(), fm.is_finite()) {
                (true, true) => {
                    g[axis] = (fp - fm) / (2.0 * h);
                    d2[axis] = (fp - 2.0 * c + fm) / (h * h);
                }
                (true, false) => g[axis] = (fp - c) / h,
                (false, true) => g[axis] = (c - fm) / h,
                _ => {}
            }
        }
        let corners = [at(1, 1), at(-1, -1), at(1, -1), at(-1, 1)];
        let cross = if corners.iter().all(|v| v.is_finite()) {
            (corners[0] + corners[1] - corners[2] - corners[3]) / (4.0 * h * h)
        } else {
            0.0
        };
        (
            Point::new(g[0], g[1]),
            Matrix2::new(d2[0], cross, cross, d2[1]),
        )
    }

    /// Integrates `g(value, gradient)` over the domain using each node's
    /// quadratic reconstruction on its cell `[x ± h/2] × [y ± h/2]`. Cells of
    /// interior nodes use the 2×2 Gauss rule; cells cut by the boundary use a
    /// 16×16 midpoint sub-lattice restricted to the domain.
    fn integrate(&self, g: impl Fn(f64, Point) -> f64) -> f64 {
        let mask = &self.mask;
        let domain = mask.domain();
        let convex = domain.is_convex();
        let h = mask.spacing();
        const SUB: usize = 16;
        let step = h / SUB as f64;
        let gauss = 0.5 * h / 3f64.sqrt();
        let mut total = 0.0;
        for k in 0..mask.node_count() {
            let u = self.extended[k];
            if !u.is_finite() {
                continue;
            }
            let (grad, hess) = self.node_derivatives(k);
            let model = |d: Point| (u + grad.dot(&d) + 0.5 * d.dot(&(hess * d)), grad + hess * d);
            if mask.kind(k) == NodeKind::Interior && convex {
                let mut cell = 0.0;
                for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                    let (v, gr) = model(Point::new(sx * gauss, sy * gauss));
                    cell += g(v, gr);
                }
                total += 0.25 * cell * h * h;
                continue;
            }
            let p = mask.position(k);
            let mut cell = 0.0;
            for a in 0..SUB {
                for b in 0..SUB {
                    let d = Point::new(
                        -0.5 * h + (a as f64 + 0.5) * step,
                        -0.5 * h + (b as f64 + 0.5) * step,
                    );
                    if domain.contains(p + d) {
                        let (v, gr) = model(d);
                        cell += g(v, gr);
                    }
                }
            }
            total += cell * step * step;
        }
        total
    }
}

/// Output of [`solve_torsion`].
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: GridField,
    /// Maximum `M` of the refined local quadratic model.
    pub max_value: f64,
    pub argmax: Point,
    pub tau: f64,
    pub residual: f64,
}

/// JSON summary of a solve.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveSummary {
    pub max_value: f64,
    pub argmax: [f64; 2],
    pub tau: f64,
    pub residual: f64,
    pub h: f64,
    pub iterations: usize,
    pub unknowns: usize,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            max_value: self.max_value,
            argmax: [self.argmax.x, self.argmax.y],
            tau: self.tau,
            residual: self.residual,
            h: self.field.mask.spacing(),
            iterations: self.field.iterations,
            unknowns: self.field.mask.unknown_count(),
        }
    }
}

fn assemble(mask: &GridMask) -> Csr {
    let h2 = mask.spacing().powi(2);
    let n = mask.unknown_count();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(5 * n);
    let mut vals = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for (row, &k) in mask.unknown_nodes().iter().enumerate() {
        let legs = mask.legs(k);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(5);
        let mut diag = 0.0;
        for (d, theta) in legs.iter().enumerate() {
            diag += 1.0 / (theta * h2);
            if *theta == 1.0 {
                if let Some(col) = mask.neighbor(k, d).and_then(|nb| mask.unknown(nb)) {
                    entries.push((col, -1.0 / h2));
                }
            }
        }
        entries.push((row, diag));
        entries.sort_by_key(|e| e.0);
        for (c, v) in entries {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Csr {
        n,
        row_ptr,
        cols,
        vals,
    }
}

/// Solves the torsion problem on `mask` to residual `‖1 + Δ_h u‖_∞ < tol`.
pub fn solve_torsion(mask: impl Into<Arc<GridMask>>, tol: f64) -> Result<SolveResult> {
    let mask: Arc<GridMask> = mask.into();
    if !(tol > 0.0) {
        return Err(TorsionError::InvalidParameter(format!("tolerance {tol}")));
    }
    let n = mask.unknown_count();
    if n == 0 {
        return Err(TorsionError::SingularSystem("no unknowns".into()));
    }
    let a = assemble(&mask);
    let b = vec![1.0; n];
    let out = pcg(&a, &b, tol, MAX_ITERATIONS);
    if !out.converged {
        return Err(TorsionError::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    let mut values = vec![0.0; mask.node_count()];
    for (row, &k) in mask.unknown_nodes().iter().enumerate() {
        values[k] = out.x[row];
    }
    let mut field = GridField::from_values(mask, values);
    field.residual = out.residual;
    field.iterations = out.iterations;
    let (argmax, max_value) = refine_argmax(&field)?;
    let tau = field.integrate(|u, _| u);
    Ok(SolveResult {
        residual: out.residual,
        field,
        max_value,
        argmax,
        tau,
    })
}

/// Fits a quadratic to the 3×3 neighborhood of the largest node value and
/// returns its stationary point and value.
fn refine_argmax(field: &GridField) -> Result<(Point, f64)> {
    let mask = &field.mask;
    let (kmax, vmax) = mask
        .unknown_nodes()
        .iter()
        .map(|&k| (k, field.values[k]))
        .fold((usize::MAX, f64::NEG_INFINITY), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        });
    if mask.kind(kmax) != NodeKind::Interior {
        return Err(TorsionError::ArgmaxOnBoundary);
    }
    let (i, j) = mask.coords(kmax);
    let h = mask.spacing();
    let mut rows = Vec::with_capacity(9 * 6);
    let mut rhs = Vec::with_capacity(9);
    for b in -1i64..=1 {
        for a in -1i64..=1 {
            let k = mask.index((i as i64 + a) as usize, (j as i64 + b) as usize);
            let (x, y) = (a as f64, b as f64);
            rows.extend_from_slice(&[1.0, x, y, x * x, x * y, y * y]);
            rhs.push(field.values[k]);
        }
    }
    let design = DMatrix::from_row_slice(9, 6, &rows);
    let c = design
        .svd(true, true)
        .solve(&DVector::from_vec(rhs), 1e-14)
        .map_err(|e| TorsionError::SingularSystem(e.to_string()))?;
    let hess = Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
    let node = mask.position(kmax);
    let fallback = Ok((node, vmax));
    let Some(inv) = hess.try_inverse() else {
        return fallback;
    };
    if !(hess.determinant() > 0.0 && hess[(0, 0)] < 0.0) {
        return fallback;
    }
    let s = -(inv * Point::new(c[1], c[2]));
    if s.x.abs() > 1.0 || s.y.abs() > 1.0 {
        return fallback;
    }
    let value =
        c[0] + c[1] * s.x + c[2] * s.y + c[3] * s.x * s.x + c[4] * s.x * s.y + c[5] * s.y * s.y;
    Ok((node + s * h, value.max(vmax)))
}

/// `τ = ∫ u dx` of a solved field.
pub fn torsional_rigidity(result: &SolveResult) -> f64 {
    result.tau
}

/// `∫ v dx` with the solver's quadrature.
pub fn integral(v: &GridField) -> f64 {
    v.integrate(|u, _| u)
}

/// `∫|∇v|² dx / (∫ v dx)²` with central-difference gradients.
pub fn rayleigh_quotient(v: &GridField) -> Result<f64> {
    let mass = v.integrate(|u, _| u);
    if mass.abs() < 1e-300 || !mass.is_finite() {
        return Err(TorsionError::ZeroDenominator);
    }
    let energy = v.integrate(|_, g| g.norm_squared());
    Ok(energy / (mass * mass))
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn assembled_matrix_is_symmetric() {
        let mask = GridMask::build(&Domain::paper_triangle(), 1.0 / 16.0).unwrap();
        let a = assemble(&mask);
        let mut dense = vec![vec![0.0; a.n]; a.n];
        for i in 0..a.n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                dense[i][a.cols[k]] = a.vals[k];
            }
        }
        for i in 0..a.n {
            let off: f64 = dense[i]
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum();
            assert!(dense[i][i] >= off);
            for j in 0..a.n {
                assert_eq!(dense[i][j], dense[j][i]);
            }
        }
    }

    #[test]
    fn zero_field_has_no_rayleigh_quotient() {
        let mask = Arc::new(GridMask::build(&Domain::unit_disk(), 1.0 / 16.0).unwrap());
        let zero = GridField::sample(mask, |_| 0.0);
        assert_eq!(rayleigh_quotient(&zero), Err(TorsionError::ZeroDenominator));
    }

    #[test]
    fn quadrature_integrates_constants_and_quadratics() {
        let mask = Arc::new(GridMask::build(&Domain::unit_disk(), 1.0 / 32.0).unwrap());
        let one_minus_r2 = GridField::sample(mask, |p| (1.0 - p.norm_squared()) / 4.0);
        let exact = std::f64::consts::PI / 8.0;
        let got = integral(&one_minus_r2);
        assert!((got - exact).abs() / exact < 2e-4, "{got} vs {exact}");
    }

    #[test]
    fn sig12_rounding() {
        assert_eq!(sig12(0.1234567890123456), 0.123456789012);
        assert_eq!(sig12(0.0), 0.0);
    }

    #[test]
    fn csv_header() {
        let mask = Arc::new(GridMask::build(&Domain::unit_disk(), 1.0 / 8.0).unwrap());
        let f = GridField::sample(mask.clone(), |_| 1.0);
        let csv = f.to_csv();
        assert!(csv.starts_with("x,y,value\n"));
        assert_eq!(csv.lines().count(), mask.unknown_count() + 1);
    }
}
