use std::sync::Arc;

use proptest::prelude::*;
use torsion_core::closed_forms::{ball_torsion, ellipsoid_torsion, triangle_torsion};
use torsion_core::field_calculus::{eval_jet, radial_jet, EvaluableField, GridInterpolant};
use torsion_core::geometry::{Domain, GridMask};
use torsion_core::solver::GridField;
use torsion_core::{Point, TorsionError};

fn sampled_disk(h: f64) -> EvaluableField {
    let exact = ball_torsion(&[0.0, 0.0], 1.0).unwrap();
    let mask = Arc::new(GridMask::build(&Domain::unit_disk(), h).unwrap());
    let field = GridField::sample(mask, |p| exact.value(&[p.x, p.y]));
    GridInterpolant::new(field).unwrap().into()
}

#[test]
fn analytic_jets_match_closed_forms() {
    let f: EvaluableField = ball_torsion(&[0.0, 0.0], 1.0).unwrap().into();
    let j = eval_jet(&f, Point::new(0.3, -0.4)).unwrap();
    assert!((j.value - 0.1875).abs() < 1e-15);
    assert!((j.gradient - Point::new(-0.15, 0.2)).norm() < 1e-15);
    assert!((j.laplacian() + 1.0).abs() < 1e-15);

    let t: EvaluableField = triangle_torsion().into();
    let j = eval_jet(&t, Point::zeros()).unwrap();
    assert!((j.value - 1.0 / 3.0).abs() < 1e-15);
    assert!(j.gradient.norm() < 1e-15);
    assert!((j.hessian[(0, 0)] + 0.5).abs() < 1e-15);
    assert!((j.hessian[(1, 1)] + 0.5).abs() < 1e-15);
}

#[test]
fn sampled_disk_hessian_is_accurate() {
    let f = sampled_disk(1.0 / 64.0);
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        for j in 0..=20 {
            let p = Point::new(-0.7 + 0.07 * i as f64, -0.7 + 0.07 * j as f64);
            if p.norm() > 0.8 {
                continue;
            }
            let jet = eval_jet(&f, p).unwrap();
            worst = worst.max((jet.hessian[(0, 0)] + 0.5).abs());
            worst = worst.max((jet.hessian[(1, 1)] + 0.5).abs());
            worst = worst.max(jet.hessian[(0, 1)].abs());
        }
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn sampled_disk_max_is_polished() {
    let f = sampled_disk(1.0 / 32.0);
    let (p, m) = f.max();
    assert!(p.norm() < 1e-8);
    assert!((m - 0.25).abs() < 1e-10);
}

#[test]
fn jets_are_refused_near_and_outside_the_boundary() {
    let f = sampled_disk(1.0 / 32.0);
    assert!(matches!(
        eval_jet(&f, Point::new(0.99, 0.0)),
        Err(TorsionError::TooCloseToBoundary { .. })
    ));
    assert!(matches!(
        eval_jet(&f, Point::new(1.5, 0.0)),
        Err(TorsionError::OutOfDomain(..))
    ));
    // values stay available in the boundary layer
    let v = f.value(Point::new(0.99, 0.0)).unwrap();
    assert!((v - 0.25 * (1.0 - 0.99f64.powi(2))).abs() < 1e-5);

    let smooth: EvaluableField = triangle_torsion().into();
    assert!(matches!(
        eval_jet(&smooth, Point::new(2.0, 0.0)),
        Err(TorsionError::OutOfDomain(..))
    ));
    assert!(eval_jet(&smooth, Point::new(0.999, 0.0)).is_ok());
}

#[test]
fn radial_jet_of_ellipse_is_quadratic() {
    let f: EvaluableField = ellipsoid_torsion(&[0.0, 0.0], &[1.5, 0.5], 1.0)
        .unwrap()
        .into();
    let xi = Point::new(1.0, 1.0);
    let r = 0.3;
    let j = radial_jet(&f, Point::zeros(), xi, r).unwrap();
    // v = A r² with A = (0.75 + 0.25) / 4
    let a = 0.25;
    assert!((j.v - a * r * r).abs() < 1e-15);
    assert!((j.v_r - 2.0 * a * r).abs() < 1e-15);
    assert!((j.v_rr - 2.0 * a).abs() < 1e-15);
    assert!(radial_jet(&f, Point::zeros(), Point::zeros(), r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radial_jet_matches_finite_differences(
        theta in 0.0..std::f64::consts::TAU,
        r in 0.05..0.6f64,
    ) {
        let f: EvaluableField = triangle_torsion().into();
        let xi = Point::new(theta.cos(), theta.sin());
        let j = radial_jet(&f, Point::zeros(), xi, r).unwrap();
        let (_, m) = f.max();
        let v = |s: f64| m - f.value(xi * s).unwrap();
        let e = 1e-4;
        let fd_r = (v(r + e) - v(r - e)) / (2.0 * e);
        let fd_rr = (v(r + e) - 2.0 * v(r) + v(r - e)) / (e * e);
        prop_assert!((j.v - v(r)).abs() <= 1e-12);
        prop_assert!((j.v_r - fd_r).abs() <= 1e-6 * (1.0 + j.v_r.abs()));
        prop_assert!((j.v_rr - fd_rr).abs() <= 1e-6 * (1.0 + j.v_rr.abs()));
    }
}
