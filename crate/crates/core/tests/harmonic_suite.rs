use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::OnceLock;

use nalgebra::Matrix2;
use torsion_core::closed_forms::{ellipsoid_torsion, triangle_torsion, Jet2, SmoothField};
use torsion_core::concavity::{property_a_check, CheckOptions, NoiseModel, Verdict};
use torsion_core::field_calculus::{radial_jet, EvaluableField};
use torsion_core::geometry::{Domain, GridMask};
use torsion_core::harmonic::{
    decompose, ellipse_noise_floor, harmonicity_check, leading_term_fit, radial_sign_quantity,
    HarmonicDecomposition, HarmonicParams, ModeStatus,
};
use torsion_core::solver::{solve_torsion, DEFAULT_TOL};
use torsion_core::{Point, TorsionError};

const H: f64 = 1.0 / 64.0;

fn solved(domain: Domain) -> EvaluableField {
    let r = solve_torsion(GridMask::build(&domain, H).unwrap(), DEFAULT_TOL).unwrap();
    EvaluableField::from_solve(&r).unwrap()
}

fn grid_params() -> HarmonicParams {
    static FLOOR: OnceLock<Vec<f64>> = OnceLock::new();
    let floor = FLOOR.get_or_init(|| ellipse_noise_floor(H, &HarmonicParams::default()).unwrap());
    HarmonicParams {
        noise_floor: Some(floor.clone()),
        ..HarmonicParams::default()
    }
}

fn square() -> &'static EvaluableField {
    static F: OnceLock<EvaluableField> = OnceLock::new();
    F.get_or_init(|| solved(Domain::square(1.0)))
}

fn triangle() -> &'static EvaluableField {
    static F: OnceLock<EvaluableField> = OnceLock::new();
    F.get_or_init(|| solved(Domain::paper_triangle()))
}

fn dir(theta: f64) -> Point {
    Point::new(theta.cos(), theta.sin())
}

/// `u_T + ε r⁵ cos 3θ`, which is not a torsion function: its cubic mode
/// picks up an `r⁵` tail.
fn corrupted_triangle(eps: f64) -> SmoothField {
    let base = triangle_torsion();
    SmoothField::custom("corrupted triangle", Domain::paper_triangle(), move |p| {
        let (x, y) = (p.x, p.y);
        let (s, g) = (x * x + y * y, x * x * x - 3.0 * x * y * y);
        let (gx, gy) = (3.0 * x * x - 3.0 * y * y, -6.0 * x * y);
        let (gxx, gxy, gyy) = (6.0 * x, -6.0 * y, -6.0 * x);
        let j = base.jet2(p);
        let fxx = 2.0 * g + 4.0 * x * gx + s * gxx;
        let fxy = 2.0 * x * gy + 2.0 * y * gx + s * gxy;
        let fyy = 2.0 * g + 4.0 * y * gy + s * gyy;
        Jet2 {
            value: j.value + eps * s * g,
            gradient: j.gradient + eps * Point::new(2.0 * x * g + s * gx, 2.0 * y * g + s * gy),
            hessian: j.hessian + eps * Matrix2::new(fxx, fxy, fxy, fyy),
        }
    })
}

fn trace_is_one(d: &HarmonicDecomposition) {
    assert!(
        (d.lambda[0] + d.lambda[1] - 1.0).abs() < 1e-3,
        "{:?}",
        d.lambda
    );
}

#[test]
fn analytic_triangle_decomposition() {
    let f: EvaluableField = triangle_torsion().into();
    let d = decompose(&f, &HarmonicParams::default()).unwrap();
    trace_is_one(&d);
    assert_eq!(d.k_bar, Some(3));
    let m3 = d.mode(3).unwrap();
    assert!((m3.c_cos - 1.0 / 12.0).abs() < 1e-12);
    assert!(m3.c_sin.abs() < 1e-12);
    assert!(d.low_mode_residual < 1e-9);
    let checks = harmonicity_check(&d, 1e-3);
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0].status, ModeStatus::Pass);
    assert!(checks[0].deviation.unwrap() < 1e-9);
}

#[test]
fn solved_triangle_decomposition() {
    let d = decompose(triangle(), &grid_params()).unwrap();
    trace_is_one(&d);
    assert!((d.lambda[0] - 0.5).abs() < 1e-3 && (d.lambda[1] - 0.5).abs() < 1e-3);
    assert_eq!(d.k_bar, Some(3));
    assert!((d.mode(3).unwrap().c_cos - 1.0 / 12.0).abs() < 1e-3);
    assert!(d.modes.iter().filter(|m| m.k != 3).all(|m| !m.retained));
    let checks = harmonicity_check(&d, 1e-3);
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0].status, ModeStatus::Pass);
}

#[test]
fn ellipse_decompositions_are_rigid() {
    let exact: EvaluableField = ellipsoid_torsion(&[0.0, 0.0], &[1.5, 0.5], 1.0)
        .unwrap()
        .into();
    let grid = solved(Domain::ellipse(Point::zeros(), [1.5, 0.5], 1.0));
    for (f, params) in [(exact, HarmonicParams::default()), (grid, grid_params())] {
        let d = decompose(&f, &params).unwrap();
        trace_is_one(&d);
        assert!((d.lambda[0] - 0.75).abs() < 1e-3 && (d.lambda[1] - 0.25).abs() < 1e-3);
        assert!(d.rotation.abs() < 1e-9);
        assert_eq!(d.k_bar, None);
        assert!(d.modes.iter().all(|m| m.amplitude < m.threshold));
        assert!(harmonicity_check(&d, 1e-3).is_empty());
    }
}

#[test]
fn rotated_ellipse_frame_follows_the_axes() {
    let t = 0.4f64;
    let (c, s) = (t.cos(), t.sin());
    // u = ¼ (1 - 1.5 X² - 0.5 Y²) in axes rotated by t
    let rule = move |p: Point| {
        let (xx, yy) = (c * p.x + s * p.y, -s * p.x + c * p.y);
        let q = Matrix2::new(c, s, -s, c);
        let local = Matrix2::new(-0.75, 0.0, 0.0, -0.25);
        Jet2 {
            value: 0.25 * (1.0 - 1.5 * xx * xx - 0.5 * yy * yy),
            gradient: q.transpose() * Point::new(-0.75 * xx, -0.25 * yy),
            hessian: q.transpose() * local * q,
        }
    };
    let axes = [dir(t), dir(t + PI / 2.0)];
    let domain = Domain::polygon(&[axes[0] * 0.8, axes[1] * 1.4, -axes[0] * 0.8, -axes[1] * 1.4]);
    let f: EvaluableField = SmoothField::custom("rotated ellipse", domain, rule).into();
    let d = decompose(&f, &HarmonicParams::default()).unwrap();
    assert!((d.rotation - t).abs() < 1e-12);
    assert!((d.lambda[0] - 0.75).abs() < 1e-12);
    assert_eq!(d.k_bar, None);
}

#[test]
fn corrupted_field_fails_the_pure_power_check() {
    let clean: EvaluableField = triangle_torsion().into();
    let bad: EvaluableField = corrupted_triangle(1e-3).into();
    let params = HarmonicParams::default();
    let dc = decompose(&clean, &params).unwrap();
    let db = decompose(&bad, &params).unwrap();
    assert_eq!(db.k_bar, Some(3));
    assert!(harmonicity_check(&dc, 1e-3)
        .iter()
        .all(|c| c.status == ModeStatus::Pass));
    let bad_checks = harmonicity_check(&db, 1e-3);
    assert!(
        bad_checks.iter().any(|c| c.k == 3 && c.failed()),
        "{bad_checks:?}"
    );
}

#[test]
fn radial_sign_quantity_examples() {
    let e: EvaluableField = ellipsoid_torsion(&[0.0, 0.0], &[1.5, 0.5], 1.0)
        .unwrap()
        .into();
    for k in 0..8 {
        for r in [0.05, 0.2, 0.4] {
            let q = radial_sign_quantity(&e, Point::zeros(), dir(k as f64 * 0.7), r).unwrap();
            assert!(q.abs() < 1e-15);
        }
    }
    let t: EvaluableField = triangle_torsion().into();
    let r = 0.05;
    let down = radial_sign_quantity(&t, Point::zeros(), dir(FRAC_PI_3), r).unwrap();
    let up = radial_sign_quantity(&t, Point::zeros(), dir(0.0), r).unwrap();
    assert!((down - (-r.powi(3) / 12.0 + r.powi(4) / 48.0)).abs() < 1e-15);
    assert!(down < 0.0 && up > 0.0);
}

#[test]
fn leading_term_fit_on_the_triangle() {
    let f: EvaluableField = triangle_torsion().into();
    let d = decompose(&f, &HarmonicParams::default()).unwrap();
    for (theta, sign) in [(FRAC_PI_3, -1.0), (0.0, 1.0)] {
        let fit = leading_term_fit(&f, &d, dir(theta), 0.01, 0.1, 12).unwrap();
        assert!((fit.exponent - 3.0).abs() < 0.1, "{fit:?}");
        let predicted = fit.predicted.unwrap();
        assert!((predicted - sign / 12.0).abs() < 1e-12);
        assert!(
            (fit.coefficient - predicted).abs() < 0.1 * predicted.abs(),
            "{fit:?}"
        );
    }
    assert!(matches!(
        leading_term_fit(&f, &d, dir(0.0), 0.01, 1.0, 8),
        Err(TorsionError::RadiusTooLarge { .. })
    ));
}

#[test]
fn solved_square_has_a_fourth_mode() {
    let f = square();
    let d = decompose(f, &grid_params()).unwrap();
    trace_is_one(&d);
    assert_eq!(d.k_bar, Some(4));
    let m4 = d.mode(4).unwrap();
    assert!(m4.c_cos.abs() > 10.0 * m4.c_sin.abs());
    assert!(!d.mode(3).unwrap().retained && !d.mode(5).unwrap().retained);
    // the weak eighth mode drowns in interpolation noise at inner radii, so
    // it may be untestable but must never be flagged
    let checks = harmonicity_check(&d, 1e-3);
    assert_eq!(checks[0].k, 4);
    assert_eq!(checks[0].status, ModeStatus::Pass);
    assert!(checks.iter().all(|c| !c.failed()), "{checks:?}");
}

/// Property (A) holding forbids negative radial sign quantities; a detected
/// first mode produces one and property (A) fails.
fn chain(f: &EvaluableField, expect_mode: usize) {
    let d = decompose(f, &grid_params()).unwrap();
    assert_eq!(d.k_bar, Some(expect_mode));
    let base = Point::new(d.base[0], d.base[1]);
    let dirs: Vec<Point> = (0..64).map(|i| dir(2.0 * PI * i as f64 / 64.0)).collect();
    let negative_mode = dirs
        .iter()
        .any(|&xi| d.mode_value(expect_mode, xi).unwrap() < 0.0);
    assert!(negative_mode);
    let r = d.rho / 4.0;
    let q: Vec<f64> = dirs
        .iter()
        .map(|&xi| radial_sign_quantity(f, base, xi, r).unwrap())
        .collect();
    assert!(q.iter().any(|&v| v < 0.0));
    let report = property_a_check(f, &CheckOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Fails);
}

#[test]
fn first_mode_chain_on_the_triangle() {
    chain(triangle(), 3);
}

#[test]
fn first_mode_chain_on_the_square() {
    chain(square(), 4);
}

#[test]
fn holding_property_a_keeps_the_sign_quantity_nonnegative() {
    let f = solved(Domain::ellipse(Point::zeros(), [1.2, 0.8], 1.0));
    assert_eq!(
        property_a_check(&f, &CheckOptions::default())
            .unwrap()
            .verdict,
        Verdict::Holds
    );
    let (top, _) = f.max();
    let d = decompose(&f, &grid_params()).unwrap();
    let noise = NoiseModel::for_field(&f);
    let domain = f.domain();
    for i in 0..32 {
        let xi = dir(2.0 * PI * i as f64 / 32.0);
        for j in 1..=4 {
            let r = d.rho * j as f64 / 4.0;
            let jet = radial_jet(&f, top, xi, r).unwrap();
            let q = radial_sign_quantity(&f, top, xi, r).unwrap();
            // first-order propagation of the evaluation error into 2 v v_rr - v_r²
            let dv = 2.0 * noise.value;
            let tol = 2.0
                * (jet.v_rr.abs() * dv
                    + jet.v * noise.hessian(domain.boundary_distance(top + xi * r)))
                + 2.0 * jet.v_r.abs() * noise.gradient;
            assert!(q >= -tol, "{q} {tol}");
        }
    }
}

#[test]
fn parameters_are_guarded() {
    let f: EvaluableField = triangle_torsion().into();
    let far = HarmonicParams {
        rho: Some(1.2),
        ..HarmonicParams::default()
    };
    assert!(matches!(
        decompose(&f, &far),
        Err(TorsionError::RadiusTooLarge { .. })
    ));
    let d = decompose(&f, &HarmonicParams::default()).unwrap();
    let json = serde_json::to_value(&d).unwrap();
    for key in ["lambda", "rotation", "modes", "k_bar"] {
        assert!(json.get(key).is_some());
    }
}
