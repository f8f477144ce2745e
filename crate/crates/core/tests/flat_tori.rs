use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use systolic_core::flat_finsler::{k_epsilon, k_epsilon_ratio};
use systolic_core::lattice::HERMITE_GAMMA_2;
use systolic_core::verify::{random_body, random_lattice};
use systolic_core::{AreaKind, ConvexBody, FlatFinslerTorus, Lattice2, Vec2};

fn brute_shortest(l: &Lattice2) -> f64 {
    let mut best = f64::INFINITY;
    for a in -30i64..=30 {
        for b in -30i64..=30 {
            if (a, b) != (0, 0) {
                best = best.min(l.point(a, b).norm_sq());
            }
        }
    }
    best
}

fn brute_systole(k: &ConvexBody) -> f64 {
    let mut best = f64::INFINITY;
    for a in -12i64..=12 {
        for b in -12i64..=12 {
            if (a, b) != (0, 0) {
                best = best.min(k.gauge(Vec2::new(a as f64, b as f64)));
            }
        }
    }
    best
}

fn lattice() -> impl Strategy<Value = Lattice2> {
    ((-3f64..3.0, -3f64..3.0), (-3f64..3.0, -3f64..3.0)).prop_filter_map("degenerate", |(u, v)| {
        let l = Lattice2::new(Vec2::new(u.0, u.1), Vec2::new(v.0, v.1)).ok()?;
        (l.determinant() > 0.05).then_some(l)
    })
}

fn sl2z() -> impl Strategy<Value = [[i64; 2]; 2]> {
    prop::collection::vec(0usize..4, 1..8).prop_map(|word| {
        // products of the generators of SL2(Z) and their inverses
        let gens = [
            [[1, 1], [0, 1]],
            [[1, -1], [0, 1]],
            [[1, 0], [1, 1]],
            [[1, 0], [-1, 1]],
        ];
        let mut m = [[1i64, 0], [0, 1]];
        for g in word {
            let g = gens[g];
            m = [
                [
                    m[0][0] * g[0][0] + m[0][1] * g[1][0],
                    m[0][0] * g[0][1] + m[0][1] * g[1][1],
                ],
                [
                    m[1][0] * g[0][0] + m[1][1] * g[1][0],
                    m[1][0] * g[0][1] + m[1][1] * g[1][1],
                ],
            ];
        }
        m
    })
}

#[test]
fn shortest_vector_matches_brute_force_on_500_lattices() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..500 {
        let l = random_lattice(&mut rng);
        let (v, n) = l.shortest_vector();
        let b = brute_shortest(&l);
        assert!((n - b).abs() <= 1e-9 * b, "lattice {k}: {n} vs {b}");
        assert!((v.norm_sq() - n).abs() <= 1e-12 * n.max(1.0));
    }
}

#[test]
fn systole_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for k in 0..300 {
        let b = random_body(&mut rng, k % 2 == 0);
        let (s, z) = FlatFinslerTorus::new(b.clone()).systole();
        assert!((s - brute_systole(&b)).abs() <= 1e-12, "body {k}");
        assert!((b.gauge(Vec2::new(z.0 as f64, z.1 as f64)) - s).abs() <= 1e-12);
    }
}

#[test]
fn keps_ratio_family() {
    for eps in [0.9, 0.5, 0.2, 0.07, 0.003] {
        let t = FlatFinslerTorus::new(k_epsilon(eps).unwrap());
        let expect = 2.0 * PI * eps / ((1.0 + eps) * (1.0 + eps));
        assert!((t.systolic_ratio(AreaKind::Bh) - expect).abs() < 1e-12);
        assert!((k_epsilon_ratio(eps) - expect).abs() < 1e-15);
    }
    assert!(k_epsilon(0.0).is_err());
    assert!(k_epsilon(1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hermite_invariant_is_sl2z_invariant(l in lattice(), m in sl2z()) {
        let t = l.transformed(m).unwrap();
        prop_assert!((t.determinant() - l.determinant()).abs() <= 1e-9 * l.determinant());
        prop_assert!((t.hermite_invariant() - l.hermite_invariant()).abs() <= 1e-9);
    }

    #[test]
    fn hermite_bound(l in lattice()) {
        prop_assert!(l.hermite_invariant() <= HERMITE_GAMMA_2 + 1e-9);
    }

    #[test]
    fn fundamental_domain_is_reduced(l in lattice()) {
        let f = l.fundamental_domain();
        prop_assert!(f.v.x.abs() <= 0.5 + 1e-12);
        prop_assert!(f.v.norm() >= 1.0 - 1e-9);
        prop_assert!(f.v.y > 0.0);
        prop_assert!((f.flat_riemannian_ratio() - l.flat_riemannian_ratio()).abs() <= 1e-9);
    }

    #[test]
    fn ratios_are_scale_invariant(seed in 0u64..10_000, s in 0.2f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_body(&mut rng, seed % 2 == 0);
        let (t, ts) = (FlatFinslerTorus::new(b.clone()), FlatFinslerTorus::new(b.scaled(s)));
        for kind in [AreaKind::Bh, AreaKind::Ht] {
            let (r, rs) = (t.systolic_ratio(kind), ts.systolic_ratio(kind));
            prop_assert!((r - rs).abs() <= 1e-9 * r);
        }
        let n = t.normalized();
        prop_assert!((n.systole().0 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ht_never_exceeds_bh_for_symmetric(seed in 0u64..10_000) {
        // |K| |K°| <= pi², so pi/|K| >= |K°|/pi
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = FlatFinslerTorus::new(random_body(&mut rng, true));
        prop_assert!(t.area_ht() <= t.area_bh() + 1e-12);
    }
}
