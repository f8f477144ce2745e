//! Flat Finsler tori `(R²/Z², ‖·‖_K)`.
//!
//! Geodesics of a flat metric are straight segments, so the systole is the least
//! gauge of a nonzero integer vector and both areas are constants of the body.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::convex2d::ConvexBody;
use crate::error::{Error, Result};
use crate::geom::{IVec2, Vec2};

/// Choice of Finsler area.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaKind {
    /// Busemann-Hausdorff: `pi / |K|`.
    Bh,
    /// Holmes-Thompson: `|K°| / pi`.
    Ht,
}

impl fmt::Display for AreaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaKind::Bh => "BH",
            AreaKind::Ht => "HT",
        })
    }
}

/// Translation-invariant Finsler structure with unit ball `K` at every point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatFinslerTorus {
    pub unit_ball: ConvexBody,
}

impl FlatFinslerTorus {
    pub fn new(unit_ball: ConvexBody) -> Self {
        Self { unit_ball }
    }

    pub fn is_reversible(&self) -> bool {
        self.unit_ball.is_symmetric()
    }

    /// Least norm of a nonzero integer vector, with a minimizer.
    ///
    /// `‖z‖ >= |z| / R` with `R` the circumradius, so only `|z| <= R * best` is scanned.
    pub fn systole(&self) -> (f64, IVec2) {
        let k = &self.unit_ball;
        let mut best = (f64::INFINITY, (1, 0));
        for z in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            let g = k.gauge(Vec2::new(z.0 as f64, z.1 as f64));
            if g < best.0 {
                best = (g, z);
            }
        }
        let reach = k.circumradius() * best.0;
        let r = reach.floor() as i64;
        for a in -r..=r {
            for b in -r..=r {
                if (a, b) == (0, 0) {
                    continue;
                }
                let p = Vec2::new(a as f64, b as f64);
                if p.norm() > reach * (1.0 + 1e-12) {
                    continue;
                }
                let g = k.gauge(p);
                if g < best.0 - 1e-15 {
                    best = (g, (a, b));
                }
            }
        }
        best
    }

    pub fn area_bh(&self) -> f64 {
        PI / self.unit_ball.area()
    }

    pub fn area_ht(&self) -> f64 {
        self.unit_ball.polar().area() / PI
    }

    pub fn area(&self, which: AreaKind) -> f64 {
        match which {
            AreaKind::Bh => self.area_bh(),
            AreaKind::Ht => self.area_ht(),
        }
    }

    /// `area / sys²`, invariant under rescaling of the body.
    pub fn systolic_ratio(&self, which: AreaKind) -> f64 {
        let s = self.systole().0;
        self.area(which) / (s * s)
    }

    /// Same torus with the body rescaled so that the systole is 1.
    pub fn normalized(&self) -> FlatFinslerTorus {
        let s = self.systole().0;
        FlatFinslerTorus::new(self.unit_ball.scaled(s))
    }
}

/// Asymmetric quadrilateral whose flat torus has systole 1 and BH systolic ratio
/// `2 pi eps / (1 + eps)²`, which tends to 0 with `eps`.
pub fn k_epsilon(eps: f64) -> Result<ConvexBody> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1)",
        });
    }
    let w = (1.0 + eps) / (2.0 * eps);
    let h = (1.0 - eps) / 2.0;
    ConvexBody::new(&[
        Vec2::new(0.0, 1.0),
        Vec2::new(w, h),
        Vec2::new(0.0, -eps),
        Vec2::new(-w, h),
    ])
}

/// Closed form of the BH systolic ratio of `K_eps`.
pub fn k_epsilon_ratio(eps: f64) -> f64 {
    2.0 * PI * eps / ((1.0 + eps) * (1.0 + eps))
}

/// Polar of the triangle `(-1,-1), (0,1), (1,0)`: the flat torus with least HT systolic ratio.
pub fn abt_extremal_body() -> ConvexBody {
    ConvexBody::new(&[
        Vec2::new(1.0, 1.0),
        Vec2::new(1.0, -2.0),
        Vec2::new(-2.0, 1.0),
    ])
    .expect("valid triangle")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_torus() {
        let t = FlatFinslerTorus::new(ConvexBody::square(1.0));
        let (s, z) = t.systole();
        assert_eq!(s, 1.0);
        assert_eq!(z, (1, 0));
        assert!((t.area_bh() - PI / 4.0).abs() < 1e-15);
        assert!((t.area_ht() - 2.0 / PI).abs() < 1e-15);
        assert!((t.systolic_ratio(AreaKind::Bh) - PI / 4.0).abs() < 1e-15);
        let big = FlatFinslerTorus::new(ConvexBody::square(2.0));
        assert_eq!(big.systole().0, 0.5);
    }

    #[test]
    fn k_eps_family() {
        let k = k_epsilon(0.5).unwrap();
        let want = [(0.0, 1.0), (1.5, 0.25), (0.0, -0.5), (-1.5, 0.25)];
        for w in want {
            assert!(k
                .vertices()
                .iter()
                .any(|p| p.dist(Vec2::new(w.0, w.1)) < 1e-15));
        }
        for eps in [0.1, 0.25, 0.5] {
            let k = k_epsilon(eps).unwrap();
            assert!((k.area() - (1.0 + eps).powi(2) / (2.0 * eps)).abs() < 1e-12);
            assert!(!k.is_symmetric());
            let t = FlatFinslerTorus::new(k);
            assert!((t.systole().0 - 1.0).abs() < 1e-12);
            assert!((t.systolic_ratio(AreaKind::Bh) - k_epsilon_ratio(eps)).abs() < 1e-12);
        }
        let t = FlatFinslerTorus::new(k_epsilon(0.5).unwrap());
        assert!((t.area_bh() - PI / 2.25).abs() < 1e-12);
        assert!(k_epsilon(0.0).is_err());
        assert!(k_epsilon(1.0).is_err());
    }

    #[test]
    fn abt_witness() {
        let t = FlatFinslerTorus::new(abt_extremal_body());
        assert!((t.area_ht() - 1.5 / PI).abs() < 1e-15);
        assert!((t.systolic_ratio(AreaKind::Ht) - 3.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn disk_areas() {
        let t = FlatFinslerTorus::new(ConvexBody::regular(256, 1.0, 0.0).unwrap());
        assert!((t.area_bh() - 1.0).abs() < 1e-3);
        assert!((t.area_ht() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn scale_invariance() {
        let t = FlatFinslerTorus::new(ConvexBody::regular(7, 0.8, 0.3).unwrap());
        for lambda in [0.1, 3.0, 17.0] {
            let s = FlatFinslerTorus::new(t.unit_ball.scaled(lambda));
            for w in [AreaKind::Bh, AreaKind::Ht] {
                let (a, b) = (t.systolic_ratio(w), s.systolic_ratio(w));
                assert!((a - b).abs() <= 1e-10 * a);
            }
        }
    }

    #[test]
    fn normalized_has_unit_systole() {
        let t = FlatFinslerTorus::new(ConvexBody::regular(5, 2.7, 0.1).unwrap()).normalized();
        assert!((t.systole().0 - 1.0).abs() < 1e-12);
    }
}
