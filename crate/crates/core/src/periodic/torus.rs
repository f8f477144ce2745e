//! Distances, systole, stable norm and areas of a periodic Finsler torus.

use std::f64::consts::PI;

use serde::Serialize;

use crate::convex2d::ConvexBody;
use crate::error::Result;
use crate::flat_finsler::FlatFinslerTorus;
use crate::geom::{gcd, ivec, IVec2, Vec2};
use crate::par::{self, Execution, SharedMin};

use super::field::{segment_length, MetricField};
use super::graph::{stencil_excess, Anchor, GraphParams, PeriodicGraph};

/// Number of base points per transversal at the coarse stage of stable-norm minimization.
pub const BASE_POINTS: usize = 16;

/// Relative overestimate bounds of graph lengths.
///
/// `stencil` is the worst ratio of best stencil path to straight chord over
/// sampled unit balls; `metric` is the sampled relative modulus of continuity of
/// the norm (`modulus`, per unit length) times `h * s`, the length of the
/// longest stencil edge in grid units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorModel {
    pub stencil: f64,
    pub modulus: f64,
    pub metric: f64,
}

impl ErrorModel {
    /// Combined factor: true lengths lie in `[v / (1 + r), v]` for computed `v`.
    pub fn relative(&self) -> f64 {
        (1.0 + self.stencil) * (1.0 + self.metric) - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub rel_error: f64,
    /// Absolute allowance for endpoints off the grid.
    pub endpoint_slack: f64,
}

impl DistanceEstimate {
    /// Lower bound on the true distance.
    pub fn lower(&self) -> f64 {
        ((self.value - self.endpoint_slack) / (1.0 + self.rel_error)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub value: f64,
    /// `|A(2n) - A(n)|` between the two midpoint rules.
    pub error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiameterEstimate {
    /// Largest quotient graph distance from the sampled sources.
    pub value: f64,
    /// Bound on what the source sampling can miss.
    pub slack: f64,
}

/// One sampled value of the stable norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableNormValue {
    pub z: IVec2,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Minimizing base point.
    pub base: Vec2,
    /// `(k, min_x d(x, x + k z) / k)` for the homogeneity cross-check.
    pub homogeneity: Vec<(u32, Option<f64>)>,
}

/// Sampled polygonal stable unit ball with inner and outer envelopes.
#[derive(Clone, Debug, Serialize)]
pub struct StableNormEstimate {
    pub values: Vec<StableNormValue>,
    /// Convex hull of `z_j / ‖z_j‖`.
    pub inner: ConvexBody,
    /// Polygon cut out by extending adjacent hull chords; `None` if they fail to close.
    pub outer: Option<ConvexBody>,
    pub rel_error: f64,
    /// Directions whose sample sits inside the hull by more than the error bar.
    pub flagged: Vec<IVec2>,
}

impl StableNormEstimate {
    pub fn ball(&self) -> &ConvexBody {
        &self.inner
    }

    fn grow(&self) -> f64 {
        (1.0 + self.rel_error) * (1.0 + self.rel_error)
    }

    /// Bounds on `pi / |B|` for the true ball `B`.
    pub fn bh_bounds(&self) -> (f64, f64) {
        let hi = PI / self.inner.area();
        let lo = match &self.outer {
            Some(o) => PI / (self.grow() * o.area()),
            None => 0.0,
        };
        (lo, hi)
    }

    /// Bounds on `|B°| / pi`.
    pub fn ht_bounds(&self) -> (f64, f64) {
        let hi = self.inner.polar().area() / PI;
        let lo = match &self.outer {
            Some(o) => o.polar().area() / (PI * self.grow()),
            None => 0.0,
        };
        (lo, hi)
    }

    /// Bounds on the systole of the flat torus of `B`.
    pub fn systole_bounds(&self) -> (f64, f64) {
        let hi = FlatFinslerTorus::new(self.inner.clone()).systole().0;
        let lo = match &self.outer {
            Some(o) => FlatFinslerTorus::new(o.clone()).systole().0 / (1.0 + self.rel_error),
            None => 0.0,
        };
        (lo, hi)
    }
}

/// Primitive integer vectors by increasing max-norm, then by angle; the first `count` sorted by angle.
pub fn farey_directions(count: usize) -> Vec<IVec2> {
    let mut out: Vec<IVec2> = Vec::new();
    let mut level = 1i64;
    while out.len() < count {
        let mut ring: Vec<IVec2> = Vec::new();
        for p in -level..=level {
            for q in -level..=level {
                if p.abs().max(q.abs()) == level && gcd(p, q) == 1 {
                    ring.push((p, q));
                }
            }
        }
        ring.sort_by(|a, b| ivec(*a).angle().total_cmp(&ivec(*b).angle()));
        out.extend(ring);
        level += 1;
    }
    out.truncate(count);
    out.sort_by(|a, b| ivec(*a).angle().total_cmp(&ivec(*b).angle()));
    out
}

/// A metric field together with its discretization.
#[derive(Clone, Debug)]
pub struct PeriodicTorus {
    field: MetricField,
    graph: PeriodicGraph,
    errors: ErrorModel,
    exec: Execution,
}

impl PeriodicTorus {
    pub fn new(field: MetricField, params: GraphParams) -> Result<Self> {
        let graph = PeriodicGraph::build(&field, params)?;
        let stencil = stencil_excess(&field.sample_bodies(8), graph.offsets());
        let modulus = sampled_modulus(&field, graph.h());
        let metric = modulus * graph.h() * graph.stencil() as f64;
        Ok(Self {
            field,
            graph,
            errors: ErrorModel {
                stencil,
                modulus,
                metric,
            },
            exec: params.exec,
        })
    }

    pub fn field(&self) -> &MetricField {
        &self.field
    }

    pub fn graph(&self) -> &PeriodicGraph {
        &self.graph
    }

    pub fn errors(&self) -> ErrorModel {
        self.errors
    }

    fn node_point(&self, v: (i64, i64)) -> Vec2 {
        let h = self.graph.h();
        Vec2::new(v.0 as f64 * h, v.1 as f64 * h)
    }

    /// Lifted distance `d(a, b)`.
    ///
    /// Each endpoint is joined by straight connectors to the 6×6 block of grid
    /// nodes around it and the graph search runs between the two blocks. With
    /// `na`, `nb` the nearest nodes, the true distance is at least
    /// `d(na, nb) - d(na, a) - d(b, nb)`, and `d(na, nb)` is at least the
    /// computed value minus the connectors `a -> na`, `nb -> b`.
    pub fn distance(&self, a: Vec2, b: Vec2) -> Result<DistanceEstimate> {
        let value = self
            .graph
            .set_distance(
                &self.anchors(a, false),
                &self.anchors(b, true),
                f64::INFINITY,
            )?
            .expect("unbounded search always succeeds");
        let r = self.errors.relative();
        let (na, nb) = (self.nearest(a), self.nearest(b));
        let seg = |p: Vec2, q: Vec2| segment_length(&self.field, p, q);
        let outside = seg(na, a) + seg(b, nb);
        let inside = seg(a, na) + seg(nb, b);
        Ok(DistanceEstimate {
            value,
            rel_error: r,
            endpoint_slack: inside + (1.0 + r) * outside,
        })
    }

    fn nearest(&self, p: Vec2) -> Vec2 {
        let n = self.graph.n() as f64;
        self.node_point(((p.x * n).round() as i64, (p.y * n).round() as i64))
    }

    fn anchors(&self, p: Vec2, incoming: bool) -> Vec<Anchor> {
        let n = self.graph.n() as f64;
        let (i0, j0) = ((p.x * n).floor() as i64, (p.y * n).floor() as i64);
        let mut out = Vec::with_capacity(36);
        for j in j0 - 2..=j0 + 3 {
            for i in i0 - 2..=i0 + 3 {
                let q = self.node_point((i, j));
                let cost = if incoming {
                    segment_length(&self.field, q, p)
                } else {
                    segment_length(&self.field, p, q)
                };
                out.push(((i, j), cost));
            }
        }
        out
    }

    // Minimizes d(x, x + z) over nodes of a transversal circle: a coarse pass over
    // BASE_POINTS nodes, then every node near the best one.
    fn min_over_transversal(&self, z: IVec2, bound: f64) -> Result<Option<(f64, (i64, i64))>> {
        let n = self.graph.n() as i64;
        let shift = (z.0 * n, z.1 * n);
        let node = |k: i64| -> (i64, i64) {
            let k = k.rem_euclid(n);
            if z.1 != 0 {
                (k, 0)
            } else {
                (0, k)
            }
        };
        let stride = (n / BASE_POINTS as i64).max(1);
        let shared = SharedMin::new(bound);
        let run = |ks: &[i64]| -> Result<Option<(f64, i64)>> {
            let out = par::map(self.exec, ks, |&k| {
                let b = node(k);
                let r = self
                    .graph
                    .node_distance(b, (b.0 + shift.0, b.1 + shift.1), shared.get());
                if let Ok(Some(d)) = r {
                    shared.offer(d);
                }
                r
            });
            let mut best: Option<(f64, i64)> = None;
            for (k, r) in ks.iter().zip(out) {
                if let Some(d) = r? {
                    if best.is_none_or(|(b, _)| d < b) {
                        best = Some((d, *k));
                    }
                }
            }
            Ok(best)
        };
        let coarse: Vec<i64> = (0..n).step_by(stride as usize).collect();
        let Some((mut d, mut k)) = run(&coarse)? else {
            return Ok(None);
        };
        if stride > 1 {
            let fine: Vec<i64> = (1..stride).flat_map(|o| [k - o, k + o]).collect();
            if let Some((d2, k2)) = run(&fine)? {
                if d2 < d {
                    d = d2;
                    k = k2.rem_euclid(n);
                }
            }
        }
        Ok(Some((d, node(k))))
    }

    fn value_for(&self, z: IVec2, d: f64, base: (i64, i64)) -> StableNormValue {
        let r = self.errors.relative();
        StableNormValue {
            z,
            value: d,
            lower: d / (1.0 + r),
            upper: d,
            base: self.node_point(base),
            homogeneity: Vec::new(),
        }
    }

    /// `‖z‖_st` if it is at most `bound`, without the homogeneity cross-check.
    pub fn stable_norm_bounded(&self, z: IVec2, bound: f64) -> Result<Option<StableNormValue>> {
        assert!(z != (0, 0), "stable norm of the zero class");
        Ok(self
            .min_over_transversal(z, bound)?
            .map(|(d, base)| self.value_for(z, d, base)))
    }

    /// `‖z‖_st = min_x d(x, x + z)` with the `k = 2, 3` homogeneity cross-check.
    pub fn stable_norm(&self, z: IVec2) -> Result<StableNormValue> {
        let mut v = self
            .stable_norm_bounded(z, f64::INFINITY)?
            .expect("unbounded search always succeeds");
        let r = self.errors.relative();
        for k in [2u32, 3] {
            let kz = (z.0 * k as i64, z.1 * k as i64);
            let cap = k as f64 * v.value * (1.0 + r) * 1.01;
            let m = self
                .min_over_transversal(kz, cap)?
                .map(|(d, _)| d / k as f64);
            v.homogeneity.push((k, m));
        }
        Ok(v)
    }

    /// Stable norm on `directions` primitive classes and the resulting ball envelopes.
    pub fn stable_unit_ball(&self, directions: usize) -> Result<StableNormEstimate> {
        let dirs = farey_directions(directions.max(8));
        let vals = par::map(self.exec, &dirs, |&z| {
            self.stable_norm_bounded(z, f64::INFINITY)
        });
        let mut values = Vec::with_capacity(dirs.len());
        for v in vals {
            values.push(v?.expect("unbounded search always succeeds"));
        }
        let pts: Vec<Vec2> = values.iter().map(|v| ivec(v.z) / v.value).collect();
        let inner = ConvexBody::new(&pts)?;
        let r = self.errors.relative();
        let flagged = values
            .iter()
            .zip(&pts)
            .filter(|(_, &p)| inner.gauge(p * (1.0 + r)) < 1.0 - 1e-12)
            .map(|(v, _)| v.z)
            .collect();
        // samples on the hull boundary, kept in angular order
        let boundary: Vec<Vec2> = pts
            .iter()
            .copied()
            .filter(|&p| inner.gauge(p) >= 1.0 - 1e-9)
            .collect();
        let outer = outer_envelope(&boundary);
        Ok(StableNormEstimate {
            values,
            inner,
            outer,
            rel_error: r,
            flagged,
        })
    }

    /// Systole and a minimizing primitive class.
    ///
    /// Graph paths cost at least `c |z|` with `c` the least weight per length, so
    /// only classes with `c |z| <= best` can win.
    pub fn systole(&self) -> Result<(DistanceEstimate, IVec2)> {
        let mut best = (f64::INFINITY, (1, 0));
        for z in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            if self.field.is_reversible() && (z.0 < 0 || z.1 < 0) {
                continue;
            }
            if let Some(v) = self.stable_norm_bounded(z, best.0)? {
                if v.value < best.0 {
                    best = (v.value, z);
                }
            }
        }
        let reach = best.0 / self.graph.min_ratio();
        let r = reach.floor() as i64;
        let mut cands: Vec<IVec2> = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                let z = (a, b);
                if a.abs() + b.abs() <= 1 || gcd(a, b) != 1 || ivec(z).norm() > reach {
                    continue;
                }
                // a reversible norm takes equal values on ±z; keep one of each pair
                if self.field.is_reversible() && (b < 0 || (b == 0 && a < 0)) {
                    continue;
                }
                cands.push(z);
            }
        }
        cands.sort_by(|x, y| {
            ivec(*x)
                .norm_sq()
                .total_cmp(&ivec(*y).norm_sq())
                .then(x.cmp(y))
        });
        for z in cands {
            if self.graph.min_ratio() * ivec(z).norm() > best.0 {
                continue;
            }
            if let Some(v) = self.stable_norm_bounded(z, best.0)? {
                if v.value < best.0 {
                    best = (v.value, z);
                }
            }
        }
        Ok((
            DistanceEstimate {
                value: best.0,
                rel_error: self.errors.relative(),
                endpoint_slack: 0.0,
            },
            best.1,
        ))
    }

    fn midpoint(&self, n: usize, density: &(dyn Fn(Vec2) -> f64 + Sync)) -> f64 {
        let rows = par::map_range(self.exec, n, |j| {
            let y = (j as f64 + 0.5) / n as f64;
            (0..n)
                .map(|i| density(Vec2::new((i as f64 + 0.5) / n as f64, y)))
                .sum::<f64>()
        });
        rows.iter().sum::<f64>() / (n * n) as f64
    }

    fn area(&self, quad_n: usize, density: &(dyn Fn(Vec2) -> f64 + Sync)) -> AreaEstimate {
        let n = quad_n.max(8);
        let coarse = self.midpoint(n, density);
        let fine = self.midpoint(2 * n, density);
        AreaEstimate {
            value: fine,
            error: (fine - coarse).abs(),
        }
    }

    /// `∫ pi / |K_x| dx` over the unit square.
    pub fn area_bh(&self, quad_n: usize) -> AreaEstimate {
        let f = &self.field;
        self.area(quad_n, &|x| f.bh_density(x))
    }

    /// `∫ |K_x°| / pi dx` over the unit square.
    pub fn area_ht(&self, quad_n: usize) -> AreaEstimate {
        let f = &self.field;
        self.area(quad_n, &|x| f.ht_density(x))
    }

    /// Largest quotient distance from an 8×8 grid of sources to all grid nodes.
    pub fn diameter(&self) -> Result<DiameterEstimate> {
        let n = self.graph.n();
        let k = 8.min(n);
        let sources: Vec<(i64, i64)> = (0..k * k)
            .map(|s| (((s % k) * n / k) as i64, ((s / k) * n / k) as i64))
            .collect();
        let out = par::map(self.exec, &sources, |&s| {
            self.graph
                .quotient_distances(s)
                .map(|d| d.into_iter().fold(0.0, f64::max))
        });
        let mut value = 0.0f64;
        for r in out {
            value = value.max(r?);
        }
        let spacing = (n / k) as f64 * self.graph.h();
        let slack =
            self.graph.max_ratio() * std::f64::consts::SQRT_2 * (spacing + self.graph.h()) / 2.0;
        Ok(DiameterEstimate { value, slack })
    }
}

fn sampled_modulus(field: &MetricField, h: f64) -> f64 {
    if field.is_flat() {
        return 0.0;
    }
    let m = 16;
    let dirs: Vec<Vec2> = (0..16).map(|k| Vec2::polar(k as f64 * PI / 8.0)).collect();
    let steps = [Vec2::new(h, 0.0), Vec2::new(0.0, h)];
    let mut worst = 0.0f64;
    for j in 0..m {
        for i in 0..m {
            let x = Vec2::new((i as f64 + 0.25) / m as f64, (j as f64 + 0.25) / m as f64);
            for &u in &dirs {
                let g = field.gauge(x, u);
                for &s in &steps {
                    let r = (field.gauge(x + s, u) / g - 1.0).abs() / h;
                    worst = worst.max(r);
                }
            }
        }
    }
    worst
}

/// Circumscribed envelope of a convex polygon whose vertices lie on the boundary
/// of an unknown convex body: between two consecutive boundary points the body
/// stays inside the triangle cut by the extensions of the neighbouring chords.
fn outer_envelope(boundary: &[Vec2]) -> Option<ConvexBody> {
    let m = boundary.len();
    if m < 3 {
        return None;
    }
    let collinear = |u: Vec2, v: Vec2| u.cross(v).abs() <= 1e-9 * u.norm() * v.norm();
    let mut pts = boundary.to_vec();
    for j in 0..m {
        let (a, b) = (boundary[(j + m - 1) % m], boundary[j]);
        let (c, d) = (boundary[(j + 1) % m], boundary[(j + 2) % m]);
        let (d1, e) = (b - a, c - d);
        let r = c - b;
        // three boundary samples on a line pin the boundary to that segment
        if collinear(d1, r) || collinear(r, -e) {
            continue;
        }
        let den = d1.cross(-e);
        if den.abs() < 1e-300 {
            return None;
        }
        let s = r.cross(-e) / den;
        let t = d1.cross(r) / den;
        if !(s >= 0.0 && t >= 0.0) {
            return None;
        }
        pts.push(b + d1 * s);
    }
    ConvexBody::new(&pts).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions() {
        let d = farey_directions(16);
        assert_eq!(d.len(), 16);
        assert!(d.contains(&(2, 1)) && d.contains(&(-1, -2)));
        assert_eq!(farey_directions(8).len(), 8);
    }

    #[test]
    fn envelope_of_square_samples() {
        let hull = ConvexBody::regular(8, 1.0, 0.0).unwrap();
        let out = outer_envelope(hull.vertices()).unwrap();
        assert!(out.area() > hull.area());
        let tri = [
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, -1.0),
        ];
        assert!(outer_envelope(&tri).is_none());
        // samples along the edges of a square pin it exactly
        let sq: Vec<Vec2> = farey_directions(16)
            .into_iter()
            .map(|z| {
                let v = ivec(z);
                v / v.x.abs().max(v.y.abs())
            })
            .collect();
        let out = outer_envelope(&sq).unwrap();
        assert!((out.area() - 4.0).abs() < 1e-12);
    }
}
