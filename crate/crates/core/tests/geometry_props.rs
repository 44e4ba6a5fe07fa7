use proptest::prelude::*;
use torsion_core::closed_forms::{ball_torsion, triangle_torsion};
use torsion_core::geometry::{
    is_convex_curve, marching_level_set, polygon_metrics, Domain, GridMask, NodeGrid, NodeKind,
};
use torsion_core::Point;

fn ellipse_strategy() -> impl Strategy<Value = Domain> {
    (-0.5f64..0.5, -0.5f64..0.5, 0.3f64..1.7, 0.5f64..2.0)
        .prop_map(|(cx, cy, a0, r)| Domain::ellipse(Point::new(cx, cy), [a0, 2.0 - a0], r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_classification_agrees_with_membership(domain in ellipse_strategy(), n in 8usize..24) {
        let h = domain.inradius() / n as f64;
        let mask = GridMask::build(&domain, h).unwrap();
        for k in 0..mask.node_count() {
            let p = mask.position(k);
            match mask.kind(k) {
                NodeKind::Exterior => {}
                _ => prop_assert!(domain.contains(p)),
            }
            if mask.kind(k) == NodeKind::Interior {
                for d in 0..4 {
                    let nb = mask.neighbor(k, d).unwrap();
                    prop_assert!(mask.kind(nb) != NodeKind::Exterior);
                }
            }
            if mask.kind(k) != NodeKind::Exterior {
                for theta in mask.legs(k) {
                    prop_assert!(theta > 0.0 && theta <= 1.0);
                }
            }
        }
        let count = mask.unknown_count() as f64 * h * h;
        prop_assert!((count - domain.area()).abs() < 2.0 * h * domain.perimeter());
    }
}

#[test]
fn level_set_perimeter_converges_on_disk() {
    let u = ball_torsion(&[0.0, 0.0], 1.0).unwrap();
    let exact_per = std::f64::consts::PI;
    let mut errors = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let grid = NodeGrid::sample(Point::new(-1.0, -1.0), Point::new(1.0, 1.0), h, |p| {
            u.value(&[p.x, p.y])
        });
        let curve = marching_level_set(&grid, 0.1875).unwrap();
        let m = polygon_metrics(&curve).unwrap();
        errors.push((m.perimeter - exact_per).abs());
    }
    for w in errors.windows(2) {
        assert!(w[1] < 0.6 * w[0], "{errors:?}");
    }
}

#[test]
fn triangle_level_set_is_convex_and_contains_origin() {
    let u = triangle_torsion();
    let c = u.value(&[0.5, 0.0]);
    let grid = NodeGrid::sample(
        Point::new(-2.1, -1.9),
        Point::new(1.1, 1.9),
        1.0 / 64.0,
        |p| u.value(&[p.x, p.y]),
    );
    let curve = marching_level_set(&grid, c).unwrap();
    assert!(is_convex_curve(&curve, 0.5 / (64.0 * 64.0)));
    assert!(Domain::level_set(&curve).contains(Point::zeros()));
}

#[test]
fn level_set_domain_from_extracted_curve_is_valid() {
    let u = triangle_torsion();
    let grid = NodeGrid::sample(
        Point::new(-2.1, -1.9),
        Point::new(1.1, 1.9),
        1.0 / 32.0,
        |p| u.value(&[p.x, p.y]),
    );
    let curve = marching_level_set(&grid, 0.2).unwrap();
    let d = Domain::level_set(&curve);
    d.validate().unwrap();
    assert!(is_convex_curve(&curve, 0.5 / (32.0 * 32.0)));
    assert!(d.contains(Point::zeros()));
    assert!((d.area() - polygon_metrics(&curve).unwrap().area).abs() < 1e-12);
}
