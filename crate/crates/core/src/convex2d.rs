//! Convex polygons containing the origin in their interior.
//!
//! A [`ConvexBody`] doubles as the unit ball of a (possibly asymmetric) norm: its
//! gauge is the norm, its support function is the dual norm, and its polar body is
//! the unit ball of the dual norm. All queries are exact on the polygon up to
//! floating point rounding; smooth bodies enter as inscribed regular polygons.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{gcd, Vec2};

/// Sine of the smallest turning angle kept when normalizing a vertex list.
pub const COLLINEAR_TOL: f64 = 1e-12;
/// Minimal distance from the origin (or a test point) to an edge line for strict interiority.
pub const INTERIOR_MARGIN: f64 = 1e-9;
/// Vertex matching tolerance of the central symmetry test.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Number of directions sampled by [`hausdorff_distance`].
pub const HAUSDORFF_DIRECTIONS: usize = 720;

/// Convex hull of a point cloud, counterclockwise, without repeated or collinear
/// vertices. The first vertex is the lowest one (smallest y, then smallest x).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let scale = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()))
        .max(1e-300);
    pts.dedup_by(|a, b| a.dist(*b) <= COLLINEAR_TOL * scale);
    if pts.len() < 3 {
        return pts;
    }
    // turn test relative to the edge lengths so the tolerance is an angle
    let keeps = |o: Vec2, a: Vec2, b: Vec2| {
        let (u, v) = (a - o, b - o);
        u.cross(v) > COLLINEAR_TOL * u.norm() * v.norm()
    };
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && !keeps(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && !keeps(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let start = lowest_index(&hull);
    hull.rotate_left(start);
    hull
}

fn lowest_index(v: &[Vec2]) -> usize {
    let mut best = 0;
    for (i, p) in v.iter().enumerate() {
        let b = v[best];
        if p.y < b.y || (p.y == b.y && p.x < b.x) {
            best = i;
        }
    }
    best
}

/// Shoelace area of a counterclockwise vertex cycle.
pub fn shoelace(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        s += vertices[i].cross(vertices[(i + 1) % n]);
    }
    0.5 * s
}

#[derive(Serialize, Deserialize)]
struct BodyJson {
    vertices: Vec<Vec2>,
}

/// Convex polygon with the origin strictly inside.
///
/// Vertices are stored counterclockwise starting from the lowest vertex. For each
/// edge `i` (from vertex `i` to vertex `i+1`) the body caches the vector `a_i`
/// with `a_i · x = 1` on the edge; these are the vertices of the polar body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyJson", into = "BodyJson")]
pub struct ConvexBody {
    vertices: Vec<Vec2>,
    symmetric: bool,
    facets: Vec<Vec2>,
    // position of the vertex with the smallest polar angle and the sorted angles
    angle_start: usize,
    angles: Vec<f64>,
}

impl TryFrom<BodyJson> for ConvexBody {
    type Error = Error;
    fn try_from(b: BodyJson) -> Result<Self> {
        ConvexBody::new(&b.vertices)
    }
}

impl From<ConvexBody> for BodyJson {
    fn from(b: ConvexBody) -> Self {
        BodyJson {
            vertices: b.vertices,
        }
    }
}

impl ConvexBody {
    /// Builds the convex hull of `points` and validates it as a body.
    pub fn new(points: &[Vec2]) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        let vertices = convex_hull(points);
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        let mut facets = Vec::with_capacity(n);
        let mut margin = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let e = b - a;
            let outward = Vec2::new(e.y, -e.x);
            let len = outward.norm();
            let c = outward.dot(a);
            margin = margin.min(c / len);
            facets.push(outward / c);
        }
        if margin <= INTERIOR_MARGIN {
            return Err(Error::OriginNotInterior { margin });
        }
        let raw: Vec<f64> = vertices.iter().map(|v| v.angle()).collect();
        let angle_start = (0..n)
            .min_by(|&i, &j| raw[i].total_cmp(&raw[j]))
            .unwrap_or(0);
        let angles = (0..n).map(|k| raw[(angle_start + k) % n]).collect();
        let symmetric = vertices
            .iter()
            .all(|v| vertices.iter().any(|w| (*v + *w).norm() <= SYMMETRY_TOL));
        Ok(Self {
            vertices,
            symmetric,
            facets,
            angle_start,
            angles,
        })
    }

    /// Axis-parallel square `[-half, half]²`.
    pub fn square(half: f64) -> Self {
        Self::new(&[
            Vec2::new(-half, -half),
            Vec2::new(half, -half),
            Vec2::new(half, half),
            Vec2::new(-half, half),
        ])
        .expect("square with positive half side")
    }

    /// Regular `n`-gon inscribed in the circle of the given radius, one vertex at angle `phase`.
    pub fn regular(n: usize, radius: f64, phase: f64) -> Result<Self> {
        let pts: Vec<Vec2> = (0..n)
            .map(|k| Vec2::polar(phase + 2.0 * PI * k as f64 / n as f64) * radius)
            .collect();
        Self::new(&pts)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Vectors `a_i` with `a_i · x = 1` on edge `i`.
    pub fn facet_normals(&self) -> &[Vec2] {
        &self.facets
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Polar body `{x : <x, y> <= 1 for all y in K}`.
    pub fn polar(&self) -> ConvexBody {
        ConvexBody::new(&self.facets).expect("polar of a valid body is a valid body")
    }

    /// Minkowski gauge `min {t >= 0 : v in tK}`.
    ///
    /// Locates the edge crossed by the ray through `v` by a binary search over the
    /// vertex angles and solves the edge equation along the ray.
    pub fn gauge(&self, v: Vec2) -> f64 {
        if v.x == 0.0 && v.y == 0.0 {
            return 0.0;
        }
        let phi = v.angle();
        let n = self.angles.len();
        // last sorted vertex with angle <= phi; wraps to the last one below the first
        let k = self.angles.partition_point(|&a| a <= phi);
        let j = if k == 0 { n - 1 } else { k - 1 };
        let edge = (self.angle_start + j) % n;
        self.facets[edge].dot(v).max(0.0)
    }

    /// Support function `max over K of <u, x>`.
    pub fn support(&self, u: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|p| p.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest Euclidean norm of a vertex.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Distance from the origin to the boundary.
    pub fn inradius(&self) -> f64 {
        self.facets
            .iter()
            .map(|a| 1.0 / a.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies inside with every edge test passing by more than [`INTERIOR_MARGIN`].
    pub fn contains_strictly(&self, p: Vec2) -> bool {
        self.facets
            .iter()
            .all(|a| (1.0 - a.dot(p)) / a.norm() > INTERIOR_MARGIN)
    }

    pub fn scaled(&self, s: f64) -> ConvexBody {
        let pts: Vec<Vec2> = self.vertices.iter().map(|&v| v * s).collect();
        ConvexBody::new(&pts).expect("positive scaling keeps a valid body")
    }

    /// Image under the linear map with rows `m[0]`, `m[1]`.
    pub fn linear_image(&self, m: [[f64; 2]; 2]) -> Result<ConvexBody> {
        let pts: Vec<Vec2> = self
            .vertices
            .iter()
            .map(|v| Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y))
            .collect();
        ConvexBody::new(&pts)
    }

    /// `|K| * |K°|`, defined for centrally symmetric bodies only.
    pub fn mahler_product(&self) -> Result<f64> {
        if !self.symmetric {
            return Err(Error::NotSymmetric);
        }
        Ok(self.area() * self.polar().area())
    }

    /// True iff the origin is the only integer point strictly inside the body.
    pub fn interior_lattice_trivial(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        let (x0, x1) = (lo.x.floor() as i64, hi.x.ceil() as i64);
        let (y0, y1) = (lo.y.floor() as i64, hi.y.ceil() as i64);
        for i in x0..=x1 {
            for j in y0..=y1 {
                if (i, j) != (0, 0) && self.contains_strictly(Vec2::new(i as f64, j as f64)) {
                    return false;
                }
            }
        }
        true
    }

    /// True iff the body meets every integer line `m1 x1 + m2 x2 = 1`, `m != 0`.
    ///
    /// Duality exchanges points and lines: the line of `m` misses the body exactly
    /// when `m` lies in the interior of the polar body.
    pub fn meets_all_integer_lines(&self) -> bool {
        self.polar().interior_lattice_trivial()
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Vertex `i` modulo the vertex count.
    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i % self.vertices.len()]
    }
}

/// Hausdorff distance of two convex bodies, as the largest support-function gap
/// over [`HAUSDORFF_DIRECTIONS`] equally spaced directions.
pub fn hausdorff_distance(a: &ConvexBody, b: &ConvexBody) -> f64 {
    (0..HAUSDORFF_DIRECTIONS)
        .map(|k| {
            let u = Vec2::polar(2.0 * PI * k as f64 / HAUSDORFF_DIRECTIONS as f64);
            (a.support(u) - b.support(u)).abs()
        })
        .fold(0.0, f64::max)
}

/// Minkowski combination `sum w_k K_k` for nonnegative weights.
///
/// Edge vectors of all scaled bodies are merged by angle starting from the sum of
/// the lowest vertices. The support function of the result is the weighted sum of
/// the support functions.
pub fn minkowski_combination(terms: &[(f64, &ConvexBody)]) -> Result<ConvexBody> {
    let mut start = Vec2::ZERO;
    let mut edges: Vec<(f64, Vec2)> = Vec::new();
    for &(w, body) in terms {
        if w <= 0.0 {
            continue;
        }
        let vs = body.vertices();
        // vertices start at the lowest one, so edge angles increase in [0, 2pi)
        start += vs[0] * w;
        for i in 0..vs.len() {
            let e = (vs[(i + 1) % vs.len()] - vs[i]) * w;
            let mut a = e.angle();
            if a < 0.0 {
                a += 2.0 * PI;
            }
            edges.push((a, e));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pts = Vec::with_capacity(edges.len());
    let mut p = start;
    for (_, e) in edges {
        pts.push(p);
        p += e;
    }
    ConvexBody::new(&pts)
}

/// Interior and boundary lattice point counts of an integer polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PickCount {
    pub interior: u64,
    pub boundary: u64,
}

impl PickCount {
    pub fn area(&self) -> f64 {
        self.interior as f64 + self.boundary as f64 / 2.0 - 1.0
    }
}

/// Pick's formula `i + b/2 - 1` for a convex polygon with integer vertices.
///
/// The polygon does not need to contain the origin. Vertices may deviate from
/// integers by at most `1e-9`.
pub fn pick_count(points: &[Vec2]) -> Result<PickCount> {
    let mut ipts = Vec::with_capacity(points.len());
    for p in points {
        let (rx, ry) = (p.x.round(), p.y.round());
        if (p.x - rx).abs() > 1e-9 || (p.y - ry).abs() > 1e-9 {
            return Err(Error::NotLatticePolygon);
        }
        ipts.push(Vec2::new(rx, ry));
    }
    let hull: Vec<(i64, i64)> = convex_hull(&ipts)
        .iter()
        .map(|p| (p.x as i64, p.y as i64))
        .collect();
    let n = hull.len();
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let boundary: i64 = (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            gcd(b.0 - a.0, b.1 - a.1)
        })
        .sum();
    let (x0, x1) = (
        hull.iter().map(|p| p.0).min().unwrap_or(0),
        hull.iter().map(|p| p.0).max().unwrap_or(0),
    );
    let (y0, y1) = (
        hull.iter().map(|p| p.1).min().unwrap_or(0),
        hull.iter().map(|p| p.1).max().unwrap_or(0),
    );
    let mut interior = 0u64;
    for x in x0..=x1 {
        for y in y0..=y1 {
            let inside = (0..n).all(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0) > 0
            });
            if inside {
                interior += 1;
            }
        }
    }
    Ok(PickCount {
        interior,
        boundary: boundary as u64,
    })
}

/// Area of an integer polygon by Pick's formula.
pub fn pick_area(points: &[Vec2]) -> Result<f64> {
    pick_count(points).map(|c| c.area())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn triangle() -> ConvexBody {
        ConvexBody::new(&[v(-1.0, -1.0), v(0.0, 1.0), v(1.0, 0.0)]).unwrap()
    }

    fn same_set(a: &[Vec2], b: &[Vec2], tol: f64) -> bool {
        a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| p.dist(*q) <= tol))
    }

    #[test]
    fn areas() {
        assert_eq!(ConvexBody::square(1.0).area(), 4.0);
        assert!((triangle().area() - 1.5).abs() < 1e-15);
        let k = ConvexBody::new(&[v(0.0, 1.0), v(1.5, 0.25), v(0.0, -0.5), v(-1.5, 0.25)]).unwrap();
        assert!((k.area() - 2.25).abs() < 1e-14);
    }

    #[test]
    fn normalization_orders_and_merges() {
        let k = ConvexBody::new(&[
            v(1.0, 1.0),
            v(-1.0, -1.0),
            v(0.0, -1.0),
            v(1.0, -1.0),
            v(-1.0, 1.0),
            v(0.2, 0.1),
        ])
        .unwrap();
        assert_eq!(k.len(), 4);
        assert_eq!(k.vertices()[0], v(-1.0, -1.0));
        assert!(k.area() > 0.0);
        assert!(k.is_symmetric());
    }

    #[test]
    fn rejects_bad_bodies() {
        assert!(matches!(
            ConvexBody::new(&[v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)]),
            Err(Error::OriginNotInterior { .. })
        ));
        assert!(matches!(
            ConvexBody::new(&[v(1.0, 0.0), v(2.0, 0.0), v(3.0, 0.0)]),
            Err(Error::TooFewVertices(_))
        ));
        assert!(matches!(
            ConvexBody::new(&[v(f64::NAN, 0.0), v(2.0, 0.0), v(3.0, 1.0)]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn polar_examples() {
        let p = ConvexBody::square(1.0).polar();
        assert!(same_set(
            p.vertices(),
            &[v(1.0, 0.0), v(0.0, 1.0), v(-1.0, 0.0), v(0.0, -1.0)],
            1e-12
        ));
        let t = triangle().polar();
        assert!(same_set(
            t.vertices(),
            &[v(1.0, 1.0), v(1.0, -2.0), v(-2.0, 1.0)],
            1e-12
        ));
        assert!((t.area() - 4.5).abs() < 1e-12);
        let back = t.polar();
        assert!(same_set(back.vertices(), triangle().vertices(), 1e-12));
    }

    #[test]
    fn gauge_examples() {
        let sq = ConvexBody::square(1.0);
        assert!((sq.gauge(v(3.0, 1.0)) - 3.0).abs() < 1e-15);
        let tp = triangle().polar();
        assert!((tp.gauge(v(1.0, 1.0)) - 1.0).abs() < 1e-15);
        for &p in tp.vertices() {
            assert!((tp.gauge(p * 2.0) - 2.0).abs() < 1e-12);
        }
        assert_eq!(sq.gauge(Vec2::ZERO), 0.0);
    }

    #[test]
    fn support_examples() {
        assert_eq!(ConvexBody::square(1.0).support(v(1.0, 2.0)), 3.0);
        let cross = ConvexBody::square(1.0).polar();
        assert!((cross.support(v(3.0, 1.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn mahler_examples() {
        assert!((ConvexBody::square(1.0).mahler_product().unwrap() - 8.0).abs() < 1e-12);
        let hex = ConvexBody::regular(6, 1.0, 0.0).unwrap();
        assert!((hex.mahler_product().unwrap() - 9.0).abs() < 1e-12);
        let disk = ConvexBody::regular(64, 1.0, 0.0).unwrap();
        let p = disk.mahler_product().unwrap();
        assert!((p - PI * PI).abs() / (PI * PI) < 5e-3);
        assert!(matches!(
            triangle().mahler_product(),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn lattice_criteria() {
        assert!(ConvexBody::square(1.0).interior_lattice_trivial());
        assert!(!ConvexBody::regular(64, 1.5, 0.0)
            .unwrap()
            .interior_lattice_trivial());
        assert!(triangle().polar().interior_lattice_trivial());
        assert!(triangle().meets_all_integer_lines());
        assert!(!ConvexBody::square(0.25).meets_all_integer_lines());
        assert!(ConvexBody::square(1.0).meets_all_integer_lines());
    }

    #[test]
    fn small_square_misses_a_line_directly() {
        // the line x1 = 1 lies beyond every vertex
        let s = ConvexBody::square(0.25);
        assert!(s.vertices().iter().all(|p| p.x < 1.0));
        assert!(s.support(v(1.0, 0.0)) < 1.0);
    }

    #[test]
    fn pick_examples() {
        let c = pick_count(&[v(0.0, 0.0), v(2.0, 0.0), v(0.0, 2.0)]).unwrap();
        assert_eq!((c.interior, c.boundary), (0, 6));
        assert_eq!(c.area(), 2.0);
        let c = pick_count(&[v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)]).unwrap();
        assert_eq!((c.interior, c.boundary), (0, 4));
        let c = pick_count(triangle().vertices()).unwrap();
        assert_eq!((c.interior, c.boundary), (1, 3));
        assert_eq!(c.area(), 1.5);
        assert!(matches!(
            pick_area(&[v(0.0, 0.0), v(1.5, 0.0), v(0.0, 1.0)]),
            Err(Error::NotLatticePolygon)
        ));
    }

    #[test]
    fn hausdorff_examples() {
        let a = ConvexBody::square(1.0);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let d = hausdorff_distance(&a, &ConvexBody::square(2.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        let moved: Vec<Vec2> = a.vertices().iter().map(|&p| p + v(1e-6, -0.5e-6)).collect();
        let b = ConvexBody::new(&moved).unwrap();
        assert!(hausdorff_distance(&a, &b) <= 2e-6);
    }

    #[test]
    fn minkowski_of_squares() {
        let a = ConvexBody::square(1.0);
        let b = ConvexBody::square(1.0).polar();
        let s = minkowski_combination(&[(0.5, &a), (0.5, &b)]).unwrap();
        for k in 0..64 {
            let u = Vec2::polar(k as f64 * 0.1);
            let want = 0.5 * a.support(u) + 0.5 * b.support(u);
            assert!((s.support(u) - want).abs() < 1e-12);
        }
        assert_eq!(s.len(), 8);
    }

    #[test]
    fn json_shape() {
        let b: ConvexBody = serde_json::from_str(r#"{"vertices": [[1,0],[0,1],[-1,-1]]}"#).unwrap();
        assert_eq!(b.len(), 3);
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.starts_with(r#"{"vertices":"#));
        assert!(
            serde_json::from_str::<ConvexBody>(r#"{"vertices": [[1,0],[2,0],[3,0]]}"#).is_err()
        );
    }
}
