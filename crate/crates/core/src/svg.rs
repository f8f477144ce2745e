//! Static SVG figures: bodies, integer lines, reduction traces, stable balls.

use std::fmt::Write;

use crate::convex2d::ConvexBody;
use crate::geom::Vec2;
use crate::polygon_reduce::ReductionTrace;

const SIZE: f64 = 600.0;

/// Canvas mapping the square `[-extent, extent]²` onto the picture, y up.
pub struct Canvas {
    extent: f64,
    body: String,
}

impl Canvas {
    pub fn new(extent: f64) -> Self {
        Self {
            extent,
            body: String::new(),
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let s = SIZE / (2.0 * self.extent);
        ((p.x + self.extent) * s, (self.extent - p.y) * s)
    }

    pub fn polygon(&mut self, body: &ConvexBody, stroke: &str, fill: &str) {
        let pts: Vec<String> = body
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = self.map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" stroke="{stroke}" fill="{fill}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }

    pub fn line(&mut self, a: Vec2, b: Vec2, stroke: &str, width: f64) {
        let ((x1, y1), (x2, y2)) = (self.map(a), self.map(b));
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn dot(&mut self, p: Vec2, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="{fill}"/>"#
        );
    }

    pub fn axes(&mut self) {
        let e = self.extent;
        self.line(Vec2::new(-e, 0.0), Vec2::new(e, 0.0), "#bbbbbb", 0.5);
        self.line(Vec2::new(0.0, -e), Vec2::new(0.0, e), "#bbbbbb", 0.5);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn extent_of<'a>(bodies: impl IntoIterator<Item = &'a ConvexBody>) -> f64 {
    let r = bodies
        .into_iter()
        .map(|b| b.circumradius())
        .fold(0.0, f64::max);
    (r * 1.15).max(1e-6)
}

/// A body and its polar on common axes.
pub fn body_and_polar(body: &ConvexBody) -> String {
    let polar = body.polar();
    let mut c = Canvas::new(extent_of([body, &polar]));
    c.axes();
    c.polygon(&polar, "#d62728", "none");
    c.polygon(body, "#1f77b4", "none");
    c.finish()
}

/// Integer lines `m · x = 1` with `m1² + m2² <= bound`, clipped to the view.
pub fn integer_lines(bound: i64, overlay: Option<&ConvexBody>) -> String {
    let extent = overlay.map_or(2.5, |b| extent_of([b]).max(2.5));
    let mut c = Canvas::new(extent);
    for (m1, m2) in integer_line_normals(bound) {
        let m = Vec2::new(m1 as f64, m2 as f64);
        // foot of the perpendicular and a direction along the line
        let foot = m / m.norm_sq();
        let dir = m.perp() / m.norm();
        let t = 2.0 * extent;
        c.line(foot - dir * t, foot + dir * t, "#555555", 0.6);
    }
    if let Some(b) = overlay {
        c.polygon(b, "#d62728", "none");
    }
    c.finish()
}

/// Nonzero `m` with `m1² + m2² <= bound`, in lexicographic order.
pub fn integer_line_normals(bound: i64) -> Vec<(i64, i64)> {
    let r = (bound as f64).sqrt().floor() as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if (a, b) != (0, 0) && a * a + b * b <= bound {
                out.push((a, b));
            }
        }
    }
    out
}

/// All snapshots of a reduction, fading from light to dark.
pub fn trace(trace: &ReductionTrace) -> String {
    let bodies: Vec<&ConvexBody> = std::iter::once(&trace.initial)
        .chain(trace.steps.iter().map(|s| &s.body))
        .collect();
    let mut c = Canvas::new(extent_of(bodies.iter().copied()));
    c.axes();
    let k = bodies.len().max(2) - 1;
    for (i, b) in bodies.iter().enumerate() {
        let g = 200 - (170 * i / k) as u8 as u32;
        let colour = format!("#{g:02x}{g:02x}{:02x}", 255);
        c.polygon(b, &colour, "none");
    }
    for v in trace.last_body().vertices() {
        c.dot(*v, "#d62728");
    }
    c.finish()
}

/// Sampled stable ball with its sample points and optional outer envelope.
pub fn stable_ball(inner: &ConvexBody, outer: Option<&ConvexBody>, samples: &[Vec2]) -> String {
    let mut c = Canvas::new(extent_of(outer.into_iter().chain([inner])));
    c.axes();
    if let Some(o) = outer {
        c.polygon(o, "#999999", "none");
    }
    c.polygon(inner, "#1f77b4", "none");
    for &p in samples {
        c.dot(p, "#1f77b4");
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_counts() {
        assert_eq!(
            integer_line_normals(1),
            vec![(-1, 0), (0, -1), (0, 1), (1, 0)]
        );
        let svg = integer_lines(50, None);
        let brute = (-8i64..=8)
            .flat_map(|a| (-8i64..=8).map(move |b| (a, b)))
            .filter(|&(a, b)| (a, b) != (0, 0) && a * a + b * b <= 50)
            .count();
        assert_eq!(svg.matches("<line").count(), brute);
    }

    #[test]
    fn polygons_present() {
        let s = body_and_polar(&ConvexBody::square(1.0));
        assert_eq!(s.matches("<polygon").count(), 2);
        assert!(s.starts_with("<svg"));
    }
}
