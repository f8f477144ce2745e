//! Polygon deformations behind the Mahler and Álvarez-Balacheff-Tzanev bounds.
//!
//! The Mahler step moves an opposite vertex pair parallel to the chord of its
//! neighbours, which keeps the area, until a neighbour pair becomes collinear.
//! The ÁBT driver moves vertices inward while keeping every integer line
//! `m · x = 1` met, until each vertex is pinned by two supporting integer lines.

use serde::{Deserialize, Serialize};

use crate::convex2d::ConvexBody;
use crate::error::{Error, Result};
use crate::geom::Vec2;

/// A vertex lies on a line when its residual is at most this.
pub const LINE_TOL: f64 = 1e-10;
/// Step budget of the ÁBT driver.
pub const MAX_STEPS: usize = 10_000;
// lattice boxes larger than this are shrunk by halving the move
const MAX_CANDIDATES: f64 = 4.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    MahlerPairRemoval,
    AbtPushToLine,
    AbtSlideAlongLine,
    VertexMerge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub kind: StepKind,
    pub body: ConvexBody,
    /// `|P| |P°|` for Mahler steps, `|P|` for ÁBT steps.
    pub monitored: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub initial: ConvexBody,
    pub initial_monitored: f64,
    pub steps: Vec<ReductionStep>,
}

impl ReductionTrace {
    fn new(initial: &ConvexBody, monitored: f64) -> Self {
        Self {
            initial: initial.clone(),
            initial_monitored: monitored,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, kind: StepKind, body: &ConvexBody, monitored: f64) {
        self.steps.push(ReductionStep {
            kind,
            body: body.clone(),
            monitored,
        });
    }

    /// Monitored values, starting with the initial one.
    pub fn monitored(&self) -> Vec<f64> {
        std::iter::once(self.initial_monitored)
            .chain(self.steps.iter().map(|s| s.monitored))
            .collect()
    }

    /// True when the monitored quantity never grows by more than `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.monitored().windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn last_body(&self) -> &ConvexBody {
        self.steps.last().map_or(&self.initial, |s| &s.body)
    }

    fn append(&mut self, other: ReductionTrace) {
        self.steps.extend(other.steps);
    }
}

fn product(p: &ConvexBody) -> f64 {
    p.area() * p.polar().area()
}

// Largest t >= 0 along `v + t d` before the vertex becomes collinear with the edge (a, b).
fn collinear_time(a: Vec2, b: Vec2, v: Vec2, d: Vec2) -> f64 {
    let e = b - a;
    let f0 = e.cross(v - a);
    let df = e.cross(d);
    if df.abs() < 1e-300 || f0 / df > 0.0 {
        return f64::INFINITY;
    }
    -f0 / df
}

/// One Mahler step: removes an opposite vertex pair at constant area.
///
/// Every pair is tried in both directions and the move with the least volume
/// product is kept; ties go to the lowest vertex index.
pub fn mahler_reduce_step(p: &ConvexBody) -> Result<(ConvexBody, ReductionTrace)> {
    if !p.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = p.len();
    if n <= 4 {
        return Err(Error::AlreadyParallelogram);
    }
    let m = n / 2;
    let v = p.vertices();
    let at = |k: isize| v[k.rem_euclid(n as isize) as usize];
    let mut best: Option<(f64, ConvexBody)> = None;
    for i in 0..m as isize {
        let d = at(i + 1) - at(i - 1);
        let d = d / d.norm();
        for dir in [d, -d] {
            let t = collinear_time(at(i + 1), at(i + 2), at(i), dir).min(collinear_time(
                at(i - 2),
                at(i - 1),
                at(i),
                dir,
            ));
            if !t.is_finite() {
                continue;
            }
            let mut w = v.to_vec();
            let moved = at(i) + dir * t;
            w[i as usize] = moved;
            w[i as usize + m] = -moved;
            let Ok(q) = ConvexBody::new(&w) else { continue };
            if q.len() != n - 2 {
                continue;
            }
            let prod = product(&q);
            if best.as_ref().is_none_or(|(b, _)| prod < *b) {
                best = Some((prod, q));
            }
        }
    }
    let (prod, q) = best
        .ok_or_else(|| Error::PreconditionViolated("no admissible pair move found".to_string()))?;
    let mut trace = ReductionTrace::new(p, product(p));
    trace.push(StepKind::MahlerPairRemoval, &q, prod);
    Ok((q, trace))
}

/// Repeats the Mahler step down to a parallelogram.
pub fn mahler_reduce(p: &ConvexBody) -> Result<(ConvexBody, ReductionTrace)> {
    if !p.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let mut trace = ReductionTrace::new(p, product(p));
    let mut cur = p.clone();
    while cur.len() > 4 {
        let (q, t) = mahler_reduce_step(&cur)?;
        trace.append(t);
        cur = q;
    }
    Ok((cur, trace))
}

/// Integer points `m` with `m · v <= 1 + LINE_TOL` for every vertex `v`, zero excluded.
fn dual_lattice_points(p: &ConvexBody) -> Option<Vec<(i64, i64)>> {
    let (lo, hi) = p.polar().bounding_box();
    let (x0, x1) = ((lo.x - 1e-9).floor() as i64, (hi.x + 1e-9).ceil() as i64);
    let (y0, y1) = ((lo.y - 1e-9).floor() as i64, (hi.y + 1e-9).ceil() as i64);
    if ((x1 - x0 + 1) as f64) * ((y1 - y0 + 1) as f64) > MAX_CANDIDATES {
        return None;
    }
    let mut out = Vec::new();
    for a in x0..=x1 {
        for b in y0..=y1 {
            if (a, b) == (0, 0) {
                continue;
            }
            let m = Vec2::new(a as f64, b as f64);
            if p.vertices().iter().all(|v| m.dot(*v) <= 1.0 + LINE_TOL) {
                out.push((a, b));
            }
        }
    }
    Some(out)
}

/// Integer lines through vertex `i` that support the polygon.
pub fn supporting_integer_lines(p: &ConvexBody, i: usize) -> Vec<(i64, i64)> {
    let v = p.vertex(i);
    dual_lattice_points(p)
        .unwrap_or_default()
        .into_iter()
        .filter(|&(a, b)| (Vec2::new(a as f64, b as f64).dot(v) - 1.0).abs() <= LINE_TOL)
        .collect()
}

enum Move {
    Pinned(Vec2),
    Partial(Vec2),
    Full(Vec2),
}

// Moves vertex i along v + t d for t in [0, t_end], stopping at the first integer
// line that would otherwise stop meeting the polygon.
fn guarded_move(
    p: &ConvexBody,
    i: usize,
    d: Vec2,
    t_end: f64,
    skip: Option<(i64, i64)>,
) -> Result<Move> {
    let n = p.len();
    let v = p.vertex(i);
    let others: Vec<Vec2> = (0..n).filter(|&j| j != i).map(|j| p.vertex(j)).collect();
    let mut t_try = t_end;
    for _ in 0..64 {
        let mut w = others.clone();
        w.push(v + d * t_try);
        if let Ok(q) = ConvexBody::new(&w) {
            if let Some(cands) = dual_lattice_points(&q) {
                let mut hit = f64::INFINITY;
                for (a, b) in cands {
                    if Some((a, b)) == skip {
                        continue;
                    }
                    let m = Vec2::new(a as f64, b as f64);
                    let mv = m.dot(v);
                    let md = m.dot(d);
                    if mv < 1.0 - LINE_TOL || md >= 0.0 {
                        continue;
                    }
                    if others.iter().any(|o| m.dot(*o) >= 1.0 - LINE_TOL) {
                        continue;
                    }
                    let t = (1.0 - mv) / md;
                    hit = hit.min(t.max(0.0));
                }
                return Ok(if hit <= t_try {
                    Move::Pinned(v + d * hit)
                } else if t_try < t_end {
                    Move::Partial(v + d * t_try)
                } else {
                    Move::Full(v + d * t_end)
                });
            }
        }
        t_try *= 0.5;
    }
    Err(Error::PreconditionViolated(
        "vertex move degenerates the polygon".to_string(),
    ))
}

fn replace_vertex(p: &ConvexBody, i: usize, w: Vec2) -> Result<ConvexBody> {
    let mut vs = p.vertices().to_vec();
    vs[i] = w;
    ConvexBody::new(&vs)
}

fn solve_lines(m1: (i64, i64), m2: (i64, i64)) -> Option<Vec2> {
    let det = m1.0 * m2.1 - m1.1 * m2.0;
    if det == 0 {
        return None;
    }
    let d = det as f64;
    Some(Vec2::new(
        (m2.1 - m1.1) as f64 / d,
        (m1.0 - m2.0) as f64 / d,
    ))
}

/// Deforms a polygon meeting every integer line into one with integer vertices.
///
/// Lines are tracked through the supporting lines at each vertex: a line can only
/// stop meeting the polygon when the moving vertex is its last contact point.
pub fn abt_reduce(p: &ConvexBody) -> Result<(ConvexBody, ReductionTrace)> {
    if !p.meets_all_integer_lines() {
        return Err(Error::PreconditionViolated(
            "polygon misses some integer line".to_string(),
        ));
    }
    let mut cur = p.clone();
    let mut trace = ReductionTrace::new(p, p.area());
    for _ in 0..MAX_STEPS {
        let lines: Vec<Vec<(i64, i64)>> = (0..cur.len())
            .map(|i| supporting_integer_lines(&cur, i))
            .collect();
        let step = if let Some(i) = lines.iter().position(|l| l.is_empty()) {
            push_step(&cur, i)?
        } else if let Some(i) = lines.iter().position(|l| l.len() == 1) {
            slide_step(&cur, i, lines[i][0])?
        } else {
            return Ok((cur, trace));
        };
        let (kind, next) = step;
        if next.area() > cur.area() + 1e-12 {
            return Err(Error::PreconditionViolated(
                "deformation increased the area".to_string(),
            ));
        }
        trace.push(kind, &next, next.area());
        cur = next;
    }
    Err(Error::NoTermination(MAX_STEPS))
}

// First deformation: push a free vertex toward its projection on the neighbour chord.
fn push_step(p: &ConvexBody, i: usize) -> Result<(StepKind, ConvexBody)> {
    let n = p.len();
    let (a, v, b) = (p.vertex(i + n - 1), p.vertex(i), p.vertex(i + 1));
    let e = b - a;
    let s = ((v - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
    let d = a + e * s - v;
    Ok(match guarded_move(p, i, d, 1.0, None)? {
        Move::Pinned(w) | Move::Partial(w) => (StepKind::AbtPushToLine, replace_vertex(p, i, w)?),
        Move::Full(w) => (StepKind::VertexMerge, replace_vertex(p, i, w)?),
    })
}

// Second deformation: slide a vertex along its only supporting integer line.
fn slide_step(p: &ConvexBody, i: usize, line: (i64, i64)) -> Result<(StepKind, ConvexBody)> {
    let n = p.len();
    let at = |k: isize| p.vertex((i as isize + k).rem_euclid(n as isize) as usize);
    let (vm2, vm1, v, vp1, vp2) = (at(-2), at(-1), at(0), at(1), at(2));
    let m = Vec2::new(line.0 as f64, line.1 as f64);
    let mut d = m.perp() / m.norm();
    let slope = 0.5 * d.cross(vp1 - vm1);
    let lower = if (i + n - 1) % n < (i + 1) % n {
        vm1
    } else {
        vp1
    };
    if slope > 0.0 || (slope == 0.0 && d.dot(lower - v) < 0.0) {
        d = -d;
    }
    let t_end = [
        collinear_time(vm2, vm1, v, d),
        collinear_time(vp1, vp2, v, d),
        collinear_time(vm1, vp1, v, d),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    if !t_end.is_finite() {
        return Err(Error::PreconditionViolated(
            "slide has no stopping event".to_string(),
        ));
    }
    Ok(match guarded_move(p, i, d, t_end, Some(line))? {
        Move::Pinned(w) => {
            // snap to the exact crossing of the two supporting lines
            let q = replace_vertex(p, i, w)?;
            let j = q
                .vertices()
                .iter()
                .position(|x| x.dist(w) < 1e-9)
                .unwrap_or(i);
            let ls = supporting_integer_lines(&q, j);
            let snapped = ls
                .iter()
                .find(|&&l| l != line)
                .and_then(|&l| solve_lines(line, l))
                .filter(|x| x.dist(w) < 1e-8)
                .unwrap_or(w);
            (StepKind::AbtSlideAlongLine, replace_vertex(p, i, snapped)?)
        }
        Move::Partial(w) => (StepKind::AbtSlideAlongLine, replace_vertex(p, i, w)?),
        Move::Full(w) => (StepKind::VertexMerge, replace_vertex(p, i, w)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abt_triangle() -> ConvexBody {
        ConvexBody::new(&[
            Vec2::new(-1.0, -1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0),
        ])
        .unwrap()
    }

    fn hexagon() -> ConvexBody {
        ConvexBody::regular(6, 1.0, 0.0).unwrap()
    }

    #[test]
    fn mahler_step_on_hexagon() {
        let h = hexagon();
        let (q, trace) = mahler_reduce_step(&h).unwrap();
        assert_eq!(q.len(), 4);
        assert!((q.area() - 1.5 * 3f64.sqrt()).abs() < 1e-9);
        assert!(product(&q) <= product(&h) + 1e-9);
        assert!(product(&q) >= 8.0 - 1e-9);
        assert!(trace.is_monotone(1e-9));
        assert_eq!(trace.steps[0].kind, StepKind::MahlerPairRemoval);
    }

    #[test]
    fn mahler_rejects_parallelogram_and_asymmetric() {
        assert!(matches!(
            mahler_reduce_step(&ConvexBody::square(1.0)),
            Err(Error::AlreadyParallelogram)
        ));
        assert!(matches!(
            mahler_reduce_step(&abt_triangle()),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn mahler_driver_step_count() {
        let p = ConvexBody::regular(12, 1.0, 0.1).unwrap();
        let (q, trace) = mahler_reduce(&p).unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(trace.steps.len(), 4);
        assert!(trace.is_monotone(1e-9));
        assert!(product(&q) >= 8.0 - 1e-6);
    }

    #[test]
    fn abt_fixed_point() {
        let t = abt_triangle();
        let (q, trace) = abt_reduce(&t).unwrap();
        assert!(trace.steps.is_empty());
        assert!((q.area() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn abt_scaled_triangle() {
        let t = abt_triangle().scaled(1.2);
        let (q, trace) = abt_reduce(&t).unwrap();
        assert!(trace.is_monotone(1e-12));
        for v in q.vertices() {
            assert!((v.x - v.x.round()).abs() < 1e-6 && (v.y - v.y.round()).abs() < 1e-6);
        }
        assert!(q.area() >= 1.5 - 1e-9);
        assert!(q.meets_all_integer_lines());
    }

    #[test]
    fn abt_rejects_small_bodies() {
        assert!(matches!(
            abt_reduce(&ConvexBody::square(0.25)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn supporting_lines_of_triangle() {
        let t = abt_triangle();
        for i in 0..3 {
            assert!(supporting_integer_lines(&t, i).len() >= 2);
        }
    }
}
