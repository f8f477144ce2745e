//! Periodic grid graph discretizing the lifted Finsler distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::convex2d::ConvexBody;
use crate::error::{Error, Result};
use crate::geom::{gcd, Vec2};
use crate::par::{self, Execution};

use super::field::{segment_length, MetricField};

/// Discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphParams {
    /// Grid spacing; `1/h` must be an integer.
    pub h: f64,
    /// Stencil order: offsets `(p, q)` primitive with `|p|, |q| <= stencil`.
    pub stencil: usize,
    /// Largest search padding, in fundamental domains.
    pub max_pad_domains: usize,
    pub exec: Execution,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            h: 1.0 / 64.0,
            stencil: 4,
            max_pad_domains: 6,
            exec: Execution::Parallel,
        }
    }
}

/// Primitive offsets of order `s`, sorted by angle in `(-pi, pi]`.
pub fn primitive_stencil(s: usize) -> Vec<(i64, i64)> {
    let s = s as i64;
    let mut out = Vec::new();
    for p in -s..=s {
        for q in -s..=s {
            if (p, q) != (0, 0) && gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out.sort_by(|a, b| {
        let (ta, tb) = (
            (a.1 as f64).atan2(a.0 as f64),
            (b.1 as f64).atan2(b.0 as f64),
        );
        ta.total_cmp(&tb)
    });
    out
}

/// Worst relative overestimate of a norm by its best path in the stencil cone.
///
/// On the cone spanned by consecutive offsets `e_a, e_b` the graph can realize
/// `a g(e_a) + b g(e_b)` for `w = a e_a + b e_b`; the gauge is linear between
/// its vertices, so the maximum of this ratio is attained at a vertex of the body.
pub fn stencil_excess(bodies: &[ConvexBody], offsets: &[(i64, i64)]) -> f64 {
    let dirs: Vec<Vec2> = offsets.iter().map(|&o| Vec2::from(o)).collect();
    let k = dirs.len();
    let mut worst = 0.0f64;
    for body in bodies {
        let g: Vec<f64> = dirs.iter().map(|&d| body.gauge(d)).collect();
        for &w in body.vertices() {
            let gw = body.gauge(w);
            for i in 0..k {
                let (ea, eb) = (dirs[i], dirs[(i + 1) % k]);
                let c = ea.cross(eb);
                let (a, b) = (w.cross(eb) / c, ea.cross(w) / c);
                if a >= 0.0 && b >= 0.0 {
                    let r = (a * g[i] + b * g[(i + 1) % k]) / gw - 1.0;
                    worst = worst.max(r);
                }
            }
        }
    }
    worst
}

#[derive(Clone, Copy)]
struct Item {
    key: f64,
    node: u32,
}

impl PartialEq for Item {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key && self.node == o.node
    }
}

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Item {
    // min-heap on key, ties by node index for reproducible pops
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .total_cmp(&self.key)
            .then_with(|| o.node.cmp(&self.node))
    }
}

/// Grid node with an entry or exit cost.
pub type Anchor = ((i64, i64), f64);

fn anchor_box(set: &[Anchor]) -> ((i64, i64), (i64, i64)) {
    let mut lo = (i64::MAX, i64::MAX);
    let mut hi = (i64::MIN, i64::MIN);
    for &((x, y), _) in set {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    (lo, hi)
}

/// Rectangle of grid nodes `[x0, x0 + w) × [y0, y0 + ht)` with periodic weight lookup.
struct Patch {
    x0: i64,
    y0: i64,
    w: usize,
    ht: usize,
    col: Vec<usize>,
    row: Vec<usize>,
}

impl Patch {
    fn new(n: usize, x0: i64, y0: i64, w: usize, ht: usize) -> Self {
        let m = n as i64;
        Self {
            x0,
            y0,
            w,
            ht,
            col: (0..w as i64)
                .map(|i| (x0 + i).rem_euclid(m) as usize)
                .collect(),
            row: (0..ht as i64)
                .map(|j| (y0 + j).rem_euclid(m) as usize * n)
                .collect(),
        }
    }

    fn local(&self, p: (i64, i64)) -> Option<usize> {
        let (i, j) = (p.0 - self.x0, p.1 - self.y0);
        (i >= 0 && j >= 0 && (i as usize) < self.w && (j as usize) < self.ht)
            .then(|| j as usize * self.w + i as usize)
    }
}

/// Directed grid graph on `h Z²` with periodic edge weights.
#[derive(Clone, Debug)]
pub struct PeriodicGraph {
    n: usize,
    h: f64,
    stencil: usize,
    offsets: Vec<(i64, i64)>,
    weights: Vec<f64>,
    min_ratio: f64,
    max_ratio: f64,
    max_pad: usize,
}

impl PeriodicGraph {
    pub fn build(field: &MetricField, params: GraphParams) -> Result<Self> {
        let inv = 1.0 / params.h;
        let n = inv.round() as usize;
        if params.h.is_nan() || params.h <= 0.0 || n < 4 || (inv - n as f64).abs() > 1e-9 * inv {
            return Err(Error::OutOfRange {
                name: "h",
                value: params.h,
                range: "1/N for an integer N >= 4",
            });
        }
        if params.stencil == 0 || params.stencil > 16 {
            return Err(Error::OutOfRange {
                name: "stencil",
                value: params.stencil as f64,
                range: "1..=16",
            });
        }
        let h = 1.0 / n as f64;
        let offsets = primitive_stencil(params.stencil);
        let steps: Vec<Vec2> = offsets.iter().map(|&o| Vec2::from(o) * h).collect();
        let rows = par::map_range(params.exec, n, |j| {
            let mut out = Vec::with_capacity(n * steps.len());
            for i in 0..n {
                let p = Vec2::new(i as f64 * h, j as f64 * h);
                for &d in &steps {
                    out.push(segment_length(field, p, p + d));
                }
            }
            out
        });
        let weights: Vec<f64> = rows.into_iter().flatten().collect();
        let lens: Vec<f64> = steps.iter().map(|d| d.norm()).collect();
        let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
        for (idx, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidField(format!("non-positive edge weight {w}")));
            }
            let r = w / lens[idx % lens.len()];
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
        Ok(Self {
            n,
            h,
            stencil: params.stencil,
            offsets,
            weights,
            // keeps the heuristic admissible under rounding
            min_ratio: min_ratio * (1.0 - 1e-12),
            max_ratio,
            max_pad: params.max_pad_domains * n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn stencil(&self) -> usize {
        self.stencil
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }

    /// Least edge weight per unit Euclidean length: graph distances are at least this times `|b - a|`.
    pub fn min_ratio(&self) -> f64 {
        self.min_ratio
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    /// Weight of the edge leaving grid node `node` along offset index `e`.
    #[inline]
    pub fn weight(&self, node: (i64, i64), e: usize) -> f64 {
        let m = self.n as i64;
        let idx = (node.1.rem_euclid(m) as usize * self.n + node.0.rem_euclid(m) as usize)
            * self.offsets.len()
            + e;
        self.weights[idx]
    }

    /// Cost of an explicit staircase path, an upper bound on the node distance.
    pub fn staircase_cost(&self, from: (i64, i64), to: (i64, i64)) -> f64 {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        if (dx, dy) == (0, 0) {
            return 0.0;
        }
        let find = |o: (i64, i64)| self.offsets.iter().position(|&x| x == o);
        let g = gcd(dx, dy);
        let mut cost = 0.0;
        let mut at = from;
        let mut walk = |o: (i64, i64), times: i64, at: &mut (i64, i64)| {
            let e = find(o).expect("unit steps are in every stencil");
            for _ in 0..times {
                cost += self.weight(*at, e);
                *at = (at.0 + o.0, at.1 + o.1);
            }
        };
        let prim = (dx / g, dy / g);
        if find(prim).is_some() {
            walk(prim, g, &mut at);
        } else {
            let (sx, sy) = (dx.signum(), dy.signum());
            let diag = dx.abs().min(dy.abs());
            walk((sx, sy), diag, &mut at);
            if dx.abs() > diag {
                walk((sx, 0), dx.abs() - diag, &mut at);
            } else {
                walk((0, sy), dy.abs() - diag, &mut at);
            }
        }
        debug_assert_eq!(at, to);
        cost
    }

    // A* from a set of weighted sources to a set of weighted targets. The
    // heuristic is the scaled Euclidean distance to the bounding box of the targets.
    fn astar(
        &self,
        patch: &Patch,
        sources: &[Anchor],
        targets: &[Anchor],
        bound: f64,
    ) -> Option<f64> {
        let size = patch.w * patch.ht;
        let mut dist = vec![f64::INFINITY; size];
        let mut done = vec![false; size];
        let mut exit = vec![f64::NAN; size];
        for &(t, cost) in targets {
            let i = patch.local(t)?;
            exit[i] = if exit[i].is_nan() {
                cost
            } else {
                exit[i].min(cost)
            };
        }
        let c = self.min_ratio * self.h;
        let (lo, hi) = anchor_box(targets);
        let (lo, hi) = (
            ((lo.0 - patch.x0) as f64, (lo.1 - patch.y0) as f64),
            ((hi.0 - patch.x0) as f64, (hi.1 - patch.y0) as f64),
        );
        let heur = |idx: usize| {
            let (i, j) = ((idx % patch.w) as f64, (idx / patch.w) as f64);
            let dx = (lo.0 - i).max(i - hi.0).max(0.0);
            let dy = (lo.1 - j).max(j - hi.1).max(0.0);
            c * (dx * dx + dy * dy).sqrt()
        };
        let k = self.offsets.len();
        let limit = bound * (1.0 + 1e-12);
        let mut heap = BinaryHeap::new();
        for &(s, cost) in sources {
            let i = patch.local(s)?;
            if cost < dist[i] {
                dist[i] = cost;
                heap.push(Item {
                    key: cost + heur(i),
                    node: i as u32,
                });
            }
        }
        let mut best = f64::INFINITY;
        while let Some(Item { key, node }) = heap.pop() {
            let u = node as usize;
            if done[u] {
                continue;
            }
            if key >= best || key > limit {
                break;
            }
            done[u] = true;
            let du = dist[u];
            if !exit[u].is_nan() {
                best = best.min(du + exit[u]);
            }
            let (i, j) = (u % patch.w, u / patch.w);
            let base = (patch.row[j] + patch.col[i]) * k;
            for (e, &(p, q)) in self.offsets.iter().enumerate() {
                let (ni, nj) = (i as i64 + p, j as i64 + q);
                if ni < 0 || nj < 0 || ni as usize >= patch.w || nj as usize >= patch.ht {
                    continue;
                }
                let v = nj as usize * patch.w + ni as usize;
                if done[v] {
                    continue;
                }
                let nd = du + self.weights[base + e];
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item {
                        key: nd + heur(v),
                        node: v as u32,
                    });
                }
            }
        }
        (best <= limit).then_some(best)
    }

    /// Graph distance between two nodes of `h Z²` if it is at most `bound`.
    ///
    /// The search runs on a finite patch whose padding is chosen so that no
    /// path leaving it can be shorter than the answer; `Ok(None)` certifies that
    /// the distance exceeds `bound`.
    pub fn node_distance(
        &self,
        from: (i64, i64),
        to: (i64, i64),
        bound: f64,
    ) -> Result<Option<f64>> {
        self.set_distance(&[(from, 0.0)], &[(to, 0.0)], bound)
    }

    /// `min (a + d(s, t) + b)` over sources `(s, a)` and targets `(t, b)`, if at most `bound`.
    ///
    /// Entry and exit costs must be nonnegative.
    pub fn set_distance(
        &self,
        sources: &[Anchor],
        targets: &[Anchor],
        bound: f64,
    ) -> Result<Option<f64>> {
        assert!(
            !sources.is_empty() && !targets.is_empty(),
            "empty anchor set"
        );
        let mut upper = f64::INFINITY;
        for &(s, a) in sources {
            for &(t, b) in targets {
                upper = upper.min(a + self.staircase_cost(s, t) + b);
            }
        }
        let upper = upper.min(bound);
        let (slo, shi) = anchor_box(sources);
        let (tlo, thi) = anchor_box(targets);
        let gap = |a0: i64, a1: i64, b0: i64, b1: i64| (b0 - a1).max(a0 - b1).max(0) as f64;
        let (dx, dy) = (
            gap(slo.0, shi.0, tlo.0, thi.0),
            gap(slo.1, shi.1, tlo.1, thi.1),
        );
        let reach = upper / (self.min_ratio * self.h);
        let need = ((reach * reach - dx * dx - dy * dy).max(0.0).sqrt() / 2.0).ceil() as usize + 1;
        let pad = need.min(self.max_pad) as i64;
        let (x0, x1) = (slo.0.min(tlo.0) - pad, shi.0.max(thi.0) + pad);
        let (y0, y1) = (slo.1.min(tlo.1) - pad, shi.1.max(thi.1) + pad);
        let patch = Patch::new(
            self.n,
            x0,
            y0,
            (x1 - x0 + 1) as usize,
            (y1 - y0 + 1) as usize,
        );
        let found = self.astar(&patch, sources, targets, upper);
        let claim = found.unwrap_or(upper);
        // any path leaving the patch costs at least c * sqrt(d^2 + 4 pad^2)
        let exit = self.min_ratio * self.h * (dx * dx + dy * dy + 4.0 * (pad * pad) as f64).sqrt();
        if (pad as usize) < need && exit < claim {
            return Err(Error::PatchTooSmall {
                pad: pad as usize,
                cap: self.max_pad,
            });
        }
        Ok(found.filter(|&d| d <= bound * (1.0 + 1e-12)))
    }

    /// Single-source distances to every node class of the torus.
    ///
    /// Returns a vector indexed by `j * n + i` holding `min_z d(from, (i, j) + n z)`.
    pub fn quotient_distances(&self, from: (i64, i64)) -> Result<Vec<f64>> {
        let n = self.n;
        let mut pad = 2 * n;
        loop {
            let patch = Patch::new(
                n,
                from.0 - pad as i64,
                from.1 - pad as i64,
                2 * pad + 1,
                2 * pad + 1,
            );
            let (best, radius) = self.sweep(&patch, from);
            if best.iter().all(|d| d.is_finite()) {
                // paths leaving the patch cost at least c * pad * h
                if self.min_ratio * self.h * pad as f64 >= radius {
                    return Ok(best);
                }
            }
            if pad >= self.max_pad {
                return Err(Error::PatchTooSmall {
                    pad,
                    cap: self.max_pad,
                });
            }
            pad = (2 * pad).min(self.max_pad);
        }
    }

    // Dijkstra until every class is settled; returns class distances and the last settled value.
    fn sweep(&self, patch: &Patch, from: (i64, i64)) -> (Vec<f64>, f64) {
        let n = self.n;
        let size = patch.w * patch.ht;
        let mut dist = vec![f64::INFINITY; size];
        let mut done = vec![false; size];
        let mut best = vec![f64::INFINITY; n * n];
        let mut remaining = n * n;
        let k = self.offsets.len();
        let s = patch.local(from).expect("source inside patch");
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(Item {
            key: 0.0,
            node: s as u32,
        });
        let mut radius = 0.0;
        while let Some(Item { key, node }) = heap.pop() {
            let u = node as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            let (i, j) = (u % patch.w, u / patch.w);
            let class = patch.row[j] + patch.col[i];
            if best[class].is_infinite() {
                best[class] = key;
                radius = key;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            let base = class * k;
            for (e, &(p, q)) in self.offsets.iter().enumerate() {
                let (ni, nj) = (i as i64 + p, j as i64 + q);
                if ni < 0 || nj < 0 || ni as usize >= patch.w || nj as usize >= patch.ht {
                    continue;
                }
                let v = nj as usize * patch.w + ni as usize;
                let nd = key + self.weights[base + e];
                if !done[v] && nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item {
                        key: nd,
                        node: v as u32,
                    });
                }
            }
        }
        (best, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice2;

    #[test]
    fn stencil_sizes() {
        assert_eq!(primitive_stencil(1).len(), 8);
        assert_eq!(primitive_stencil(4).len(), 48);
        assert_eq!(primitive_stencil(6).len(), 96);
    }

    #[test]
    fn excess_vanishes_for_stencil_aligned_bodies() {
        let sq = ConvexBody::square(1.0);
        assert!(stencil_excess(&[sq], &primitive_stencil(1)) < 1e-15);
        let disk = ConvexBody::regular(64, 1.0, 0.0).unwrap();
        let e1 = stencil_excess(std::slice::from_ref(&disk), &primitive_stencil(1));
        let e4 = stencil_excess(&[disk], &primitive_stencil(4));
        assert!(e1 > 0.08 && e1 < 0.09);
        assert!(e4 < e1 / 5.0);
    }

    #[test]
    fn flat_square_distances_are_exact() {
        let m = MetricField::flat(ConvexBody::square(1.0));
        let g = PeriodicGraph::build(
            &m,
            GraphParams {
                h: 0.125,
                ..Default::default()
            },
        )
        .unwrap();
        let d = g
            .node_distance((0, 0), (16, 8), f64::INFINITY)
            .unwrap()
            .unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(g.node_distance((0, 0), (16, 8), 1.5).unwrap(), None);
    }

    #[test]
    fn quotient_distances_of_square_torus() {
        let m = MetricField::flat(ConvexBody::square(1.0));
        let g = PeriodicGraph::build(
            &m,
            GraphParams {
                h: 0.125,
                ..Default::default()
            },
        )
        .unwrap();
        let d = g.quotient_distances((0, 0)).unwrap();
        let max = d.iter().cloned().fold(0.0, f64::max);
        assert!((max - 0.5).abs() < 1e-12);
        let c = MetricField::conformal("4", Lattice2::integer()).unwrap();
        let g = PeriodicGraph::build(
            &c,
            GraphParams {
                h: 0.125,
                ..Default::default()
            },
        )
        .unwrap();
        let d = g
            .node_distance((0, 0), (8, 0), f64::INFINITY)
            .unwrap()
            .unwrap();
        assert!((d - 2.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_spacing() {
        let m = MetricField::flat(ConvexBody::square(1.0));
        assert!(PeriodicGraph::build(
            &m,
            GraphParams {
                h: 0.3,
                ..Default::default()
            }
        )
        .is_err());
    }
}
