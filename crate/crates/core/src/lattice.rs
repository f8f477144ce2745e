//! Planar lattices: determinant, shortest vector, Hermite invariant.
//!
//! A flat Riemannian torus `R²/L` has systole `sqrt(N(L))` and area `det(L)`, so
//! its systolic ratio is `1 / mu(L)` and the Hermite bound `mu <= 2/sqrt(3)`
//! reads `area >= (sqrt(3)/2) sys²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// `2 / sqrt(3)`, the supremum of the planar Hermite invariant.
pub const HERMITE_GAMMA_2: f64 = 1.154_700_538_379_251_5;

/// Full-rank lattice `Z u + Z v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice2 {
    pub u: Vec2,
    pub v: Vec2,
}

impl Lattice2 {
    pub fn new(u: Vec2, v: Vec2) -> Result<Self> {
        let det = u.cross(v);
        if !det.is_finite() || det.abs() <= 1e-12 {
            return Err(Error::DegenerateLattice(det.abs()));
        }
        Ok(Self { u, v })
    }

    pub fn integer() -> Self {
        Self {
            u: Vec2::new(1.0, 0.0),
            v: Vec2::new(0.0, 1.0),
        }
    }

    pub fn hexagonal() -> Self {
        Self {
            u: Vec2::new(1.0, 0.0),
            v: Vec2::new(0.5, 3f64.sqrt() / 2.0),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.u.cross(self.v).abs()
    }

    /// Lattice point `a u + b v`.
    pub fn point(&self, a: i64, b: i64) -> Vec2 {
        self.u * a as f64 + self.v * b as f64
    }

    /// Lagrange-Gauss reduced basis: `|u| <= |v|` and `|<u,v>| <= |u|²/2`.
    pub fn reduced(&self) -> Lattice2 {
        let (mut u, mut v) = (self.u, self.v);
        if v.norm_sq() < u.norm_sq() {
            std::mem::swap(&mut u, &mut v);
        }
        loop {
            let mu = (u.dot(v) / u.norm_sq()).round();
            v -= u * mu;
            if v.norm_sq() < u.norm_sq() {
                std::mem::swap(&mut u, &mut v);
            } else {
                break;
            }
        }
        Lattice2 { u, v }
    }

    /// A shortest nonzero vector and `N(L)`, its squared length.
    ///
    /// The first vector of a reduced basis is shortest; a finite check over the
    /// small combinations absorbs rounding in the reduction.
    pub fn shortest_vector(&self) -> (Vec2, f64) {
        let r = self.reduced();
        let mut best = (r.u, r.u.norm_sq());
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                if (a, b) == (0, 0) {
                    continue;
                }
                let p = r.point(a, b);
                if p.norm_sq() < best.1 {
                    best = (p, p.norm_sq());
                }
            }
        }
        best
    }

    /// `mu(L) = N(L) / det(L)`.
    pub fn hermite_invariant(&self) -> f64 {
        self.shortest_vector().1 / self.determinant()
    }

    /// Similar lattice with basis `(1,0), (v1, v2)` where `|v1| <= 1/2`, `v2 > 0`
    /// and `v1² + v2² >= 1`, obtained by rotation, scaling and possibly a reflection.
    pub fn fundamental_domain(&self) -> Lattice2 {
        let r = self.reduced();
        let s = r.u.norm_sq();
        let mut v1 = r.u.dot(r.v) / s;
        let v2 = (r.u.cross(r.v) / s).abs();
        v1 -= v1.round();
        Lattice2 {
            u: Vec2::new(1.0, 0.0),
            v: Vec2::new(v1, v2),
        }
    }

    /// `area / sys²` of the flat torus `R²/L`, which is `1 / mu(L)`.
    pub fn flat_riemannian_ratio(&self) -> f64 {
        self.determinant() / self.shortest_vector().1
    }

    /// Basis change by the integer matrix with rows `(a, b)`, `(c, d)`.
    pub fn transformed(&self, m: [[i64; 2]; 2]) -> Result<Lattice2> {
        Lattice2::new(self.point(m[0][0], m[0][1]), self.point(m[1][0], m[1][1]))
    }
}
