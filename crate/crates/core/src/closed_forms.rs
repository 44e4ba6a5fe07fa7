//! Exact torsion functions with analytic derivatives.
//!
//! Three closed forms solve `Δu = -1` with zero boundary values:
//! the ball `(R² - |x - c|²) / (2n)`, the ellipsoid
//! `(R² - Σ a_i (x_i - c_i)²) / (2n)` with `Σ a_i = n`, and the equilateral
//! triangle `(4 - 3y² + 3xy² - 3x² - x³) / 12`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::geometry::{Domain, COEFFICIENT_SUM_TOL};
use crate::{Point, Result, TorsionError};

/// Value, gradient and Hessian in `n` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Value, gradient and Hessian of a planar field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Point,
    pub hessian: Matrix2<f64>,
}

impl Jet2 {
    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }
}

type Rule = Arc<dyn Fn(Point) -> Jet2 + Send + Sync>;

/// A user-supplied planar field with analytic jet.
#[derive(Clone)]
pub struct CustomRule {
    pub label: String,
    pub domain: Domain,
    rule: Rule,
}

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRule")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum ClosedForm {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        coefficients: Vec<f64>,
        radius: f64,
    },
    Triangle,
    Custom(CustomRule),
}

/// A closed-form scalar field with analytic jet.
#[derive(Clone, Debug)]
pub struct SmoothField {
    form: ClosedForm,
    dim: usize,
}

/// Torsion function of the ball `B(center, R)` in `n = center.len()` dimensions.
pub fn ball_torsion(center: &[f64], radius: f64) -> Result<SmoothField> {
    if !(radius > 0.0) {
        return Err(TorsionError::InvalidDomain(format!("ball radius {radius}")));
    }
    if center.len() < 2 {
        return Err(TorsionError::InvalidParameter(
            "dimension must be at least 2".into(),
        ));
    }
    Ok(SmoothField {
        dim: center.len(),
        form: ClosedForm::Ball {
            center: center.to_vec(),
            radius,
        },
    })
}

/// Torsion function of the ellipsoid `Σ a_i (x_i - c_i)² < R²`.
pub fn ellipsoid_torsion(center: &[f64], coefficients: &[f64], radius: f64) -> Result<SmoothField> {
    let n = center.len();
    if coefficients.len() != n || n < 2 {
        return Err(TorsionError::InvalidParameter(
            "center and coefficients must share a dimension of at least 2".into(),
        ));
    }
    if !(radius > 0.0) || coefficients.iter().any(|a| !(*a > 0.0)) {
        return Err(TorsionError::InvalidDomain(
            "ellipsoid needs positive radius and coefficients".into(),
        ));
    }
    let sum: f64 = coefficients.iter().sum();
    if (sum - n as f64).abs() > COEFFICIENT_SUM_TOL {
        return Err(TorsionError::CoefficientSum { sum, dim: n });
    }
    Ok(SmoothField {
        dim: n,
        form: ClosedForm::Ellipsoid {
            center: center.to_vec(),
            coefficients: coefficients.to_vec(),
            radius,
        },
    })
}

/// Torsion function of the triangle with vertices `(-2,0)`, `(1,√3)`, `(1,-√3)`.
pub fn triangle_torsion() -> SmoothField {
    SmoothField {
        dim: 2,
        form: ClosedForm::Triangle,
    }
}

impl SmoothField {
    /// Wraps an arbitrary planar jet rule; used for constructed test fields.
    pub fn custom(
        label: impl Into<String>,
        domain: Domain,
        rule: impl Fn(Point) -> Jet2 + Send + Sync + 'static,
    ) -> Self {
        SmoothField {
            dim: 2,
            form: ClosedForm::Custom(CustomRule {
                label: label.into(),
                domain,
                rule: Arc::new(rule),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &ClosedForm {
        &self.form
    }

    /// Planar domain on which the field is a torsion function.
    pub fn natural_domain(&self) -> Option<Domain> {
        if self.dim != 2 {
            return None;
        }
        Some(match &self.form {
            ClosedForm::Ball { center, radius } => {
                Domain::disk(Point::new(center[0], center[1]), *radius)
            }
            ClosedForm::Ellipsoid {
                center,
                coefficients,
                radius,
            } => Domain::ellipse(
                Point::new(center[0], center[1]),
                [coefficients[0], coefficients[1]],
                *radius,
            ),
            ClosedForm::Triangle => Domain::paper_triangle(),
            ClosedForm::Custom(c) => c.domain.clone(),
        })
    }

    /// Location and value of the maximum.
    pub fn max_point(&self) -> (Vec<f64>, f64) {
        let n = self.dim as f64;
        match &self.form {
            ClosedForm::Ball { center, radius } | ClosedForm::Ellipsoid { center, radius, .. } => {
                (center.clone(), radius * radius / (2.0 * n))
            }
            ClosedForm::Triangle => (vec![0.0, 0.0], 1.0 / 3.0),
            ClosedForm::Custom(c) => {
                let (p, m) = custom_max(c);
                (vec![p.x, p.y], m)
            }
        }
    }

    /// Jet at `x` (any dimension).
    pub fn eval(&self, x: &[f64]) -> Jet {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let n = self.dim;
        let nf = n as f64;
        match &self.form {
            ClosedForm::Ball { center, radius } => {
                let q = DVector::from_iterator(n, x.iter().zip(center).map(|(a, c)| a - c));
                Jet {
                    value: (radius * radius - q.norm_squared()) / (2.0 * nf),
                    gradient: -q / nf,
                    hessian: -DMatrix::identity(n, n) / nf,
                }
            }
            ClosedForm::Ellipsoid {
                center,
                coefficients,
                radius,
            } => {
                let q = DVector::from_iterator(n, x.iter().zip(center).map(|(a, c)| a - c));
                let a = DVector::from_column_slice(coefficients);
                let quad: f64 = (0..n).map(|i| a[i] * q[i] * q[i]).sum();
                Jet {
                    value: (radius * radius - quad) / (2.0 * nf),
                    gradient: -a.component_mul(&q) / nf,
                    hessian: -DMatrix::from_diagonal(&a) / nf,
                }
            }
            ClosedForm::Triangle | ClosedForm::Custom(_) => {
                let j = self.jet2(Point::new(x[0], x[1]));
                Jet {
                    value: j.value,
                    gradient: DVector::from_column_slice(j.gradient.as_slice()),
                    hessian: DMatrix::from_column_slice(2, 2, j.hessian.as_slice()),
                }
            }
        }
    }

    /// Planar jet at `p`.
    pub fn jet2(&self, p: Point) -> Jet2 {
        assert_eq!(
            self.dim, 2,
            "planar jet requested from a {}-d field",
            self.dim
        );
        match &self.form {
            ClosedForm::Triangle => {
                let (x, y) = (p.x, p.y);
                Jet2 {
                    value: (4.0 - 3.0 * y * y + 3.0 * x * y * y - 3.0 * x * x - x * x * x) / 12.0,
                    gradient: Point::new(
                        (3.0 * y * y - 6.0 * x - 3.0 * x * x) / 12.0,
                        (6.0 * x * y - 6.0 * y) / 12.0,
                    ),
                    hessian: Matrix2::new(
                        (-6.0 - 6.0 * x) / 12.0,
                        y / 2.0,
                        y / 2.0,
                        (6.0 * x - 6.0) / 12.0,
                    ),
                }
            }
            ClosedForm::Custom(c) => (c.rule)(p),
            _ => {
                let j = self.eval(&[p.x, p.y]);
                Jet2 {
                    value: j.value,
                    gradient: Point::new(j.gradient[0], j.gradient[1]),
                    hessian: Matrix2::new(
                        j.hessian[(0, 0)],
                        j.hessian[(0, 1)],
                        j.hessian[(1, 0)],
                        j.hessian[(1, 1)],
                    ),
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match (&self.form, x.len()) {
            (ClosedForm::Triangle | ClosedForm::Custom(_), 2) => {
                self.jet2(Point::new(x[0], x[1])).value
            }
            _ => self.eval(x).value,
        }
    }
}

/// Lattice search followed by Newton iterations on the gradient.
fn custom_max(c: &CustomRule) -> (Point, f64) {
    let (lo, hi) = c.domain.bounding_box();
    let n = 64;
    let mut best = (Point::zeros(), f64::NEG_INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            let p = lo
                + Point::new(
                    (hi.x - lo.x) * i as f64 / n as f64,
                    (hi.y - lo.y) * j as f64 / n as f64,
                );
            if c.domain.contains(p) {
                let v = (c.rule)(p).value;
                if v > best.1 {
                    best = (p, v);
                }
            }
        }
    }
    let mut p = best.0;
    for _ in 0..50 {
        let j = (c.rule)(p);
        let Some(inv) = j.hessian.try_inverse() else {
            break;
        };
        let step = inv * j.gradient;
        p -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    (p, (c.rule)(p).value)
}
