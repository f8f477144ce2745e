use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use systolic_core::convex2d::{convex_hull, hausdorff_distance, pick_count, shoelace};
use systolic_core::verify::random_body;
use systolic_core::{ConvexBody, Vec2};

fn points(max: usize) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 3..max)
        .prop_map(|v| v.into_iter().map(|(x, y)| Vec2::new(x, y)).collect())
}

fn body() -> impl Strategy<Value = ConvexBody> {
    points(12).prop_filter_map("origin must be interior", |p| {
        ConvexBody::new(&p).ok().filter(|b| b.inradius() > 1e-3)
    })
}

fn symmetric_body() -> impl Strategy<Value = ConvexBody> {
    points(8).prop_filter_map("degenerate", |p| {
        let mut all = p.clone();
        all.extend(p.iter().map(|&q| -q));
        ConvexBody::new(&all).ok().filter(|b| b.inradius() > 1e-3)
    })
}

// brute-force check of "no integer point other than 0 strictly inside"
fn trivial_by_enumeration(k: &ConvexBody) -> bool {
    let (lo, hi) = k.bounding_box();
    for x in lo.x.floor() as i64..=hi.x.ceil() as i64 {
        for y in lo.y.floor() as i64..=hi.y.ceil() as i64 {
            if (x, y) == (0, 0) {
                continue;
            }
            let p = Vec2::new(x as f64, y as f64);
            let n = k.len();
            let inside = (0..n).all(|i| {
                let (a, b) = (k.vertex(i), k.vertex(i + 1));
                let e = b - a;
                e.cross(p - a) / e.norm() > 1e-9
            });
            if inside {
                return false;
            }
        }
    }
    true
}

#[test]
fn bipolar_identity_on_500_bodies() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..500 {
        let b = random_body(&mut rng, k % 2 == 0);
        let pp = b.polar().polar();
        assert!(hausdorff_distance(&pp, &b) <= 1e-10, "body {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mahler_between_eight_and_pi_squared(k in symmetric_body()) {
        let p = k.mahler_product().unwrap();
        prop_assert!((8.0 - 1e-9..=PI * PI + 1e-9).contains(&p), "{}", p);
    }

    #[test]
    fn gauge_is_dual_to_polar_support(k in body(), t in 0.0f64..std::f64::consts::TAU) {
        let v = Vec2::polar(t);
        // gauge of K is the support function of K°
        let g = k.gauge(v);
        prop_assert!((g - k.polar().support(v)).abs() <= 1e-9 * g.max(1.0));
        // v / gauge(v) lies on the boundary, so its support pairing is 1 for some facet
        let p = v / g;
        let worst = k.facet_normals().iter().map(|a| a.dot(p)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((worst - 1.0).abs() <= 1e-9);
        prop_assert!(k.support(v) >= p.dot(v) - 1e-12);
    }

    #[test]
    fn gauge_is_sublinear(k in body(), a in (-2f64..2.0, -2f64..2.0), b in (-2f64..2.0, -2f64..2.0), s in 0.0f64..5.0) {
        let (a, b) = (Vec2::new(a.0, a.1), Vec2::new(b.0, b.1));
        prop_assert!(k.gauge(a + b) <= k.gauge(a) + k.gauge(b) + 1e-9);
        prop_assert!((k.gauge(a * s) - s * k.gauge(a)).abs() <= 1e-9 * (1.0 + s * k.gauge(a)));
    }

    #[test]
    fn pick_equals_shoelace(v in prop::collection::vec((-6i64..6, -6i64..6), 3..10)) {
        let pts: Vec<Vec2> = v.iter().map(|&(x, y)| Vec2::new(x as f64, y as f64)).collect();
        let hull = convex_hull(&pts);
        prop_assume!(hull.len() >= 3);
        let c = pick_count(&pts).unwrap();
        prop_assert!((c.area() - shoelace(&hull)).abs() <= 1e-9);
    }

    #[test]
    fn criteria_are_dual(k in body()) {
        prop_assert_eq!(k.interior_lattice_trivial(), k.polar().meets_all_integer_lines());
    }

    #[test]
    fn interior_lattice_matches_enumeration(k in body()) {
        let k = k.scaled(1.7);
        prop_assert_eq!(k.interior_lattice_trivial(), trivial_by_enumeration(&k));
    }

    #[test]
    fn minkowski_area_bound(k in symmetric_body(), s in 0.5f64..2.5) {
        let k = k.scaled(s);
        if k.interior_lattice_trivial() {
            prop_assert!(k.area() <= 4.0 + 1e-9, "{}", k.area());
        }
    }

    #[test]
    fn hausdorff_is_a_metric(a in body(), b in body(), c in body()) {
        let (ab, ba) = (hausdorff_distance(&a, &b), hausdorff_distance(&b, &a));
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(hausdorff_distance(&a, &a) <= 1e-12);
        prop_assert!(ab <= hausdorff_distance(&a, &c) + hausdorff_distance(&c, &b) + 1e-9);
    }

    #[test]
    fn construction_is_order_independent(p in points(10), shift in 0usize..10) {
        let mut q = p.clone();
        q.rotate_left(shift % p.len());
        q.reverse();
        match (ConvexBody::new(&p), ConvexBody::new(&q)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.vertices(), b.vertices()),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "construction depends on order"),
        }
    }
}
