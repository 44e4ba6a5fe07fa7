use approx::assert_relative_eq;
use proptest::prelude::*;
use torsion_core::closed_forms::{ball_torsion, ellipsoid_torsion, triangle_torsion, SmoothField};
use torsion_core::TorsionError;

const STEP: f64 = 1e-5;

/// Central differences of the value compared with the analytic gradient and
/// Hessian.
fn check_derivatives(f: &SmoothField, x: &[f64]) -> Result<(), TestCaseError> {
    let n = x.len();
    let jet = f.eval(x);
    let scale = jet.value.abs().max(1.0);
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += STEP;
        xm[i] -= STEP;
        let g = (f.value(&xp) - f.value(&xm)) / (2.0 * STEP);
        prop_assert!(
            (g - jet.gradient[i]).abs() <= 1e-8 * scale,
            "gradient {i}: {g} vs {}",
            jet.gradient[i]
        );
        for j in 0..n {
            let at = |di: f64, dj: f64| {
                let mut y = x.to_vec();
                y[i] += di;
                y[j] += dj;
                f.value(&y)
            };
            let d2 = 1e-3;
            let fd = (at(d2, d2) - at(d2, -d2) - at(-d2, d2) + at(-d2, -d2)) / (4.0 * d2 * d2);
            prop_assert!(
                (fd - jet.hessian[(i, j)]).abs() <= 1e-5 * scale.max(jet.hessian[(i, j)].abs()),
                "hessian {i}{j}: {fd} vs {}",
                jet.hessian[(i, j)]
            );
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn ball_derivatives(x in -0.9f64..0.9, y in -0.9f64..0.9, z in -0.9f64..0.9) {
        check_derivatives(&ball_torsion(&[0.1, -0.2, 0.3], 1.5).unwrap(), &[x, y, z])?;
    }

    #[test]
    fn ellipsoid_derivatives(x in -0.5f64..0.5, y in -0.5f64..0.5, a in 0.2f64..1.8) {
        let f = ellipsoid_torsion(&[0.0, 0.0], &[a, 2.0 - a], 1.0).unwrap();
        check_derivatives(&f, &[x, y])?;
        let j = f.eval(&[x, y]);
        prop_assert!((j.hessian.trace() + 1.0).abs() < 1e-14);
        prop_assert!(j.hessian.symmetric_eigenvalues().iter().all(|l| *l <= 0.0));
    }

    #[test]
    fn triangle_derivatives(x in -1.5f64..0.9, y in -1.0f64..1.0) {
        let f = triangle_torsion();
        check_derivatives(&f, &[x, y])?;
        let j = f.jet2(torsion_core::Point::new(x, y));
        prop_assert!((j.laplacian() + 1.0).abs() < 1e-14);
        prop_assert!((j.hessian.determinant() - (1.0 - x * x - y * y) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn ball_is_concave_in_any_dimension(n in 2usize..6, r in 0.1f64..3.0) {
        let f = ball_torsion(&vec![0.0; n], r).unwrap();
        let j = f.eval(&vec![0.1; n]);
        prop_assert!(j.hessian.symmetric_eigenvalues().iter().all(|l| *l < 0.0));
        prop_assert!((j.hessian.trace() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_values_vanish(t in 0.0f64..std::f64::consts::TAU, a in 0.2f64..1.8) {
        let f = ellipsoid_torsion(&[0.3, -0.1], &[a, 2.0 - a], 1.2).unwrap();
        let p = [0.3 + 1.2 * t.cos() / a.sqrt(), -0.1 + 1.2 * t.sin() / (2.0 - a).sqrt()];
        prop_assert!(f.value(&p).abs() < 1e-12);
    }
}

#[test]
fn three_dimensional_ball() {
    let f = ball_torsion(&[0.0, 0.0, 0.0], 2.0).unwrap();
    assert_relative_eq!(f.value(&[0.0, 0.0, 0.0]), 2.0 / 3.0, max_relative = 1e-15);
}

#[test]
fn ellipsoid_in_three_dimensions_needs_coefficients_summing_to_three() {
    assert!(ellipsoid_torsion(&[0.0; 3], &[1.0, 1.0, 1.0], 1.0).is_ok());
    assert!(matches!(
        ellipsoid_torsion(&[0.0; 3], &[1.0, 1.0, 0.5], 1.0),
        Err(TorsionError::CoefficientSum { .. })
    ));
}
