//! Z²-periodic fields of unit balls `x -> K_x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::convex2d::{minkowski_combination, ConvexBody};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lattice::Lattice2;

use super::expr::Expr;

/// Vertex count of the polygon standing in for a Riemannian unit disk.
pub const CONFORMAL_POLYGON: usize = 64;

/// JSON description of a metric field.
///
/// `g0` holds the two basis vectors of the lattice whose Euclidean structure gives
/// the flat background metric: `‖w‖_g0 = |w1 u + w2 v|`. In a body grid,
/// `bodies[j * n + i]` is the unit ball at `(i/n, j/n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Conformal {
        f: String,
        #[serde(default = "identity_g0")]
        g0: [[f64; 2]; 2],
    },
    BodyGrid {
        n: usize,
        bodies: Vec<ConvexBody>,
    },
    Flat {
        body: ConvexBody,
    },
}

fn identity_g0() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

/// Conformal metric `f · g0` with a periodic positive factor.
#[derive(Clone, Debug)]
pub struct ConformalField {
    f: Expr,
    g0: Lattice2,
    disk: ConvexBody,
    disk_area: f64,
    disk_polar_area: f64,
}

impl ConformalField {
    pub fn new(f: Expr, g0: Lattice2) -> Result<Self> {
        // sample check: positive and periodic before coordinates are wrapped
        let m = 24;
        for i in 0..m {
            for j in 0..m {
                let (x1, x2) = (i as f64 / m as f64 + 0.013, j as f64 / m as f64 + 0.007);
                let v = f.eval(x1, x2);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidField(format!(
                        "conformal factor {f} is not positive at ({x1}, {x2})"
                    )));
                }
                for (d1, d2) in [(1.0, 0.0), (0.0, 1.0)] {
                    let w = f.eval(x1 + d1, x2 + d2);
                    if (w - v).abs() > 1e-9 * (1.0 + v.abs()) {
                        return Err(Error::InvalidField(format!(
                            "conformal factor {f} is not Z²-periodic at ({x1}, {x2})"
                        )));
                    }
                }
            }
        }
        let (u, v) = (g0.u, g0.v);
        let det = u.cross(v);
        let inv = [[v.y / det, -v.x / det], [-u.y / det, u.x / det]];
        let disk = ConvexBody::regular(CONFORMAL_POLYGON, 1.0, 0.0)?.linear_image(inv)?;
        let disk_area = disk.area();
        let disk_polar_area = disk.polar().area();
        Ok(Self {
            f,
            g0,
            disk,
            disk_area,
            disk_polar_area,
        })
    }

    #[inline]
    pub fn factor(&self, x: Vec2) -> f64 {
        self.f.eval(x.x - x.x.floor(), x.y - x.y.floor())
    }

    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn background(&self) -> &Lattice2 {
        &self.g0
    }

    /// Polygonal unit ball of `g0`.
    pub fn background_ball(&self) -> &ConvexBody {
        &self.disk
    }
}

/// Bilinear support-function interpolation between bodies sampled on an n×n grid.
///
/// The interpolated ball is the Minkowski combination of the four corner bodies
/// of the cell. Its gauge is evaluated from the half-plane description over the
/// union of the corner facet normals, without building the polygon.
#[derive(Clone, Debug)]
pub struct BodyGridField {
    n: usize,
    bodies: Vec<ConvexBody>,
    cells: Vec<Cell>,
}

#[derive(Clone, Debug)]
struct Cell {
    normals: Vec<Vec2>,
    // support of the four corners (00, 10, 01, 11) along each normal
    support: Vec<[f64; 4]>,
}

impl BodyGridField {
    pub fn new(n: usize, bodies: Vec<ConvexBody>) -> Result<Self> {
        if n == 0 || bodies.len() != n * n {
            return Err(Error::InvalidField(format!(
                "body grid with n = {n} needs {} bodies, got {}",
                n * n,
                bodies.len()
            )));
        }
        let mut cells = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let corners = [
                    &bodies[j * n + i],
                    &bodies[j * n + (i + 1) % n],
                    &bodies[((j + 1) % n) * n + i],
                    &bodies[((j + 1) % n) * n + (i + 1) % n],
                ];
                let mut normals: Vec<Vec2> = Vec::new();
                for b in corners {
                    for a in b.facet_normals() {
                        let u = *a / a.norm();
                        if !normals.iter().any(|w| w.dist(u) < 1e-12) {
                            normals.push(u);
                        }
                    }
                }
                let support = normals
                    .iter()
                    .map(|&u| {
                        [
                            corners[0].support(u),
                            corners[1].support(u),
                            corners[2].support(u),
                            corners[3].support(u),
                        ]
                    })
                    .collect();
                cells.push(Cell { normals, support });
            }
        }
        Ok(Self { n, bodies, cells })
    }

    fn locate(&self, x: Vec2) -> (usize, usize, [f64; 4]) {
        let nf = self.n as f64;
        let (a, b) = ((x.x - x.x.floor()) * nf, (x.y - x.y.floor()) * nf);
        let (i, j) = (
            (a.floor() as usize).min(self.n - 1),
            (b.floor() as usize).min(self.n - 1),
        );
        let (s, t) = (a - i as f64, b - j as f64);
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
        (i, j, w)
    }

    fn gauge(&self, x: Vec2, v: Vec2) -> f64 {
        let (i, j, w) = self.locate(x);
        let cell = &self.cells[j * self.n + i];
        let mut g = 0.0f64;
        for (u, h) in cell.normals.iter().zip(&cell.support) {
            let hx = w[0] * h[0] + w[1] * h[1] + w[2] * h[2] + w[3] * h[3];
            g = g.max(u.dot(v) / hx);
        }
        g
    }

    fn body_at(&self, x: Vec2) -> ConvexBody {
        let (i, j, w) = self.locate(x);
        let n = self.n;
        let terms = [
            (w[0], &self.bodies[j * n + i]),
            (w[1], &self.bodies[j * n + (i + 1) % n]),
            (w[2], &self.bodies[((j + 1) % n) * n + i]),
            (w[3], &self.bodies[((j + 1) % n) * n + (i + 1) % n]),
        ];
        minkowski_combination(&terms).expect("combination of valid bodies is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Conformal(ConformalField),
    BodyGrid(BodyGridField),
    Flat(ConvexBody),
}

/// Continuous Z²-periodic Finsler metric on the plane, given by its unit balls.
#[derive(Clone, Debug)]
pub struct MetricField {
    spec: FieldSpec,
    repr: Repr,
}

impl MetricField {
    pub fn from_spec(spec: FieldSpec) -> Result<Self> {
        let repr = match &spec {
            FieldSpec::Conformal { f, g0 } => {
                let l = Lattice2::new(Vec2::from(g0[0]), Vec2::from(g0[1]))?;
                Repr::Conformal(ConformalField::new(Expr::parse(f)?, l)?)
            }
            FieldSpec::BodyGrid { n, bodies } => {
                Repr::BodyGrid(BodyGridField::new(*n, bodies.clone())?)
            }
            FieldSpec::Flat { body } => Repr::Flat(body.clone()),
        };
        Ok(Self { spec, repr })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(s)?)
    }

    pub fn flat(body: ConvexBody) -> Self {
        Self::from_spec(FieldSpec::Flat { body }).expect("flat fields are always valid")
    }

    pub fn conformal(f: &str, g0: Lattice2) -> Result<Self> {
        Self::from_spec(FieldSpec::Conformal {
            f: f.to_string(),
            g0: [g0.u.into(), g0.v.into()],
        })
    }

    pub fn body_grid(n: usize, bodies: Vec<ConvexBody>) -> Result<Self> {
        Self::from_spec(FieldSpec::BodyGrid { n, bodies })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        match self.repr {
            Repr::Conformal(_) => "conformal",
            Repr::BodyGrid(_) => "body_grid",
            Repr::Flat(_) => "flat",
        }
    }

    pub fn as_conformal(&self) -> Option<&ConformalField> {
        match &self.repr {
            Repr::Conformal(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.repr, Repr::Flat(_))
    }

    pub fn is_reversible(&self) -> bool {
        match &self.repr {
            Repr::Conformal(_) => true,
            Repr::BodyGrid(g) => g.bodies.iter().all(|b| b.is_symmetric()),
            Repr::Flat(b) => b.is_symmetric(),
        }
    }

    /// `‖v‖_x`, the Finsler norm of `v` at `x`.
    #[inline]
    pub fn gauge(&self, x: Vec2, v: Vec2) -> f64 {
        match &self.repr {
            Repr::Conformal(c) => c.factor(x).sqrt() * c.disk.gauge(v),
            Repr::BodyGrid(g) => g.gauge(x, v),
            Repr::Flat(b) => b.gauge(v),
        }
    }

    /// The unit ball `K_x`.
    pub fn body_at(&self, x: Vec2) -> ConvexBody {
        match &self.repr {
            Repr::Conformal(c) => c.disk.scaled(1.0 / c.factor(x).sqrt()),
            Repr::BodyGrid(g) => g.body_at(x),
            Repr::Flat(b) => b.clone(),
        }
    }

    /// `pi / |K_x|`, the Busemann-Hausdorff density.
    pub fn bh_density(&self, x: Vec2) -> f64 {
        match &self.repr {
            Repr::Conformal(c) => PI * c.factor(x) / c.disk_area,
            _ => PI / self.body_at(x).area(),
        }
    }

    /// `|K_x°| / pi`, the Holmes-Thompson density.
    pub fn ht_density(&self, x: Vec2) -> f64 {
        match &self.repr {
            Repr::Conformal(c) => c.factor(x) * c.disk_polar_area / PI,
            _ => self.body_at(x).polar().area() / PI,
        }
    }

    /// Bodies on a `k × k` grid of cell centres, used by error models and bounds.
    pub fn sample_bodies(&self, k: usize) -> Vec<ConvexBody> {
        if let Repr::Flat(b) = &self.repr {
            return vec![b.clone()];
        }
        let mut out = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                let x = Vec2::new((i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64);
                out.push(self.body_at(x));
            }
        }
        if let Repr::BodyGrid(g) = &self.repr {
            out.extend(g.bodies.iter().cloned());
        }
        out
    }
}

/// Length of a polyline, with 2-point Gauss quadrature of the norm on each segment.
pub fn curve_length(field: &MetricField, polyline: &[Vec2]) -> f64 {
    polyline
        .windows(2)
        .map(|w| segment_length(field, w[0], w[1]))
        .sum()
}

const GAUSS_LO: f64 = 0.211_324_865_405_187_1;
const GAUSS_HI: f64 = 0.788_675_134_594_812_9;

#[inline]
pub(crate) fn segment_length(field: &MetricField, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    if d.x == 0.0 && d.y == 0.0 {
        return 0.0;
    }
    0.5 * (field.gauge(a + d * GAUSS_LO, d) + field.gauge(a + d * GAUSS_HI, d))
}
