use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use systolic_core::convex2d::{pick_count, shoelace};
use systolic_core::polygon_reduce::{abt_reduce, mahler_reduce, mahler_reduce_step};
use systolic_core::{ConvexBody, Error, Vec2};

fn random_octagon(rng: &mut impl Rng) -> ConvexBody {
    loop {
        let mut angles: Vec<f64> = (0..4)
            .map(|_| rng.gen_range(0.0..std::f64::consts::PI))
            .collect();
        angles.sort_by(f64::total_cmp);
        let mut pts: Vec<Vec2> = angles
            .iter()
            .map(|&t| Vec2::polar(t) * rng.gen_range(0.4..1.6))
            .collect();
        pts.extend(pts.clone().into_iter().map(|p| -p));
        if let Ok(b) = ConvexBody::new(&pts) {
            if b.len() == 8 && b.inradius() > 1e-2 {
                return b;
            }
        }
    }
}

// bodies that contain [-1.2, 1.2]², hence meet every integer line
fn big_body(rng: &mut impl Rng) -> ConvexBody {
    let mut pts = vec![
        Vec2::new(1.2, 1.2),
        Vec2::new(-1.2, 1.2),
        Vec2::new(-1.2, -1.2),
        Vec2::new(1.2, -1.2),
    ];
    for _ in 0..rng.gen_range(1..8) {
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        pts.push(Vec2::polar(t) * rng.gen_range(1.7..3.0));
    }
    ConvexBody::new(&pts).unwrap()
}

#[test]
fn mahler_driver_on_200_octagons() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..200 {
        let oct = random_octagon(&mut rng);
        let (last, trace) = mahler_reduce(&oct).unwrap();
        assert_eq!(last.len(), 4, "octagon {k}");
        assert!(
            trace.is_monotone(1e-9),
            "octagon {k}: {:?}",
            trace.monitored()
        );
        assert!(last.is_symmetric());
        // a parallelogram has product exactly 8
        assert!((last.mahler_product().unwrap() - 8.0).abs() < 1e-9);
        let m = trace.monitored();
        for (s, v) in trace.steps.iter().zip(&m[1..]) {
            assert!((s.body.mahler_product().unwrap() - v).abs() < 1e-9);
        }
    }
}

#[test]
fn abt_on_100_large_bodies() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for k in 0..100 {
        let body = big_body(&mut rng);
        let (last, trace) = abt_reduce(&body).unwrap();
        assert!(trace.is_monotone(1e-9), "body {k}");
        assert!(last.meets_all_integer_lines(), "body {k}");
        // Pick on the terminal lattice polygon agrees with its area
        let c = pick_count(last.vertices()).unwrap();
        assert!(
            (c.area() - shoelace(last.vertices())).abs() < 1e-6,
            "body {k}"
        );
        assert!(c.interior >= 1 && c.boundary >= 3);
        assert!(last.area() >= 1.5 - 1e-6);
        assert!(last.area() <= body.area() + 1e-9);
    }
}

#[test]
fn abt_rejects_small_bodies() {
    let small = ConvexBody::square(0.25);
    assert!(matches!(
        abt_reduce(&small),
        Err(Error::PreconditionViolated(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn one_mahler_step_removes_a_pair(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let oct = random_octagon(&mut rng);
        let (next, trace) = mahler_reduce_step(&oct).unwrap();
        prop_assert_eq!(next.len(), 6);
        prop_assert!(next.is_symmetric());
        prop_assert!(next.mahler_product().unwrap() <= oct.mahler_product().unwrap() + 1e-9);
        prop_assert!(trace.is_monotone(1e-9));
    }

    #[test]
    fn abt_area_is_monotone(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = big_body(&mut rng);
        let (_, trace) = abt_reduce(&body).unwrap();
        let m = trace.monitored();
        prop_assert!(m.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        for s in &trace.steps {
            prop_assert!(s.body.meets_all_integer_lines());
        }
    }
}
