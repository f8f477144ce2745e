//! Numerical audit of the isosystolic inequalities and the flattening theorems.
//!
//! Every check is oriented as `lhs >= rhs - tolerance`. For periodic fields the
//! tolerance is propagated from the solver's error model and quadrature
//! estimates, so a pass means the computed numbers are consistent with the
//! inequality under the reported error bars.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex2d::ConvexBody;
use crate::error::{Error, Result};
use crate::flat_finsler::{
    abt_extremal_body, k_epsilon, k_epsilon_ratio, AreaKind, FlatFinslerTorus,
};
use crate::geom::{ivec, Vec2};
use crate::lattice::Lattice2;
use crate::par;
use crate::periodic::expr::Expr;
use crate::periodic::{GraphParams, MetricField, PeriodicTorus};

pub const FLAT_TOL: f64 = 1e-9;
pub const SQRT3_HALF: f64 = 0.866_025_403_784_438_6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub theorem_id: String,
    pub input: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl TheoremCheck {
    pub fn new(id: &str, input: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            theorem_id: id.to_string(),
            input: input.into(),
            lhs,
            rhs,
            margin: lhs - rhs,
            tolerance,
            pass: lhs >= rhs - tolerance,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn failed(mut self, why: &str) -> Self {
        self.pass = false;
        self.note = why.to_string();
        self
    }
}

/// Convex hull of `3..=12` points on the annulus `0.3 <= r <= 1.5`, with the
/// negated points added for symmetric bodies. Non-bodies are redrawn.
pub fn random_body(rng: &mut impl Rng, symmetric: bool) -> ConvexBody {
    loop {
        let n = rng.gen_range(3..=12);
        let mut pts: Vec<Vec2> = (0..n)
            .map(|_| {
                let r = rng.gen_range(0.3..1.5);
                let a = rng.gen_range(0.0..2.0 * PI);
                Vec2::polar(a) * r
            })
            .collect();
        if symmetric {
            let neg: Vec<Vec2> = pts.iter().map(|&p| -p).collect();
            pts.extend(neg);
        }
        if let Ok(b) = ConvexBody::new(&pts) {
            if b.inradius() > 1e-3 {
                return b;
            }
        }
    }
}

pub fn random_lattice(rng: &mut impl Rng) -> Lattice2 {
    loop {
        let u = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let v = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if let Ok(l) = Lattice2::new(u, v) {
            if l.determinant() > 1e-3 {
                return l;
            }
        }
    }
}

fn body_json(b: &ConvexBody) -> String {
    serde_json::to_string(b).unwrap_or_default()
}

/// Flat-torus inequalities for each body, normalized to systole 1.
pub fn check_flat_suite(bodies: &[ConvexBody], names: &[String], tol: f64) -> Vec<TheoremCheck> {
    let mut out = Vec::new();
    for (b, name) in bodies.iter().zip(names) {
        let t = FlatFinslerTorus::new(b.clone()).normalized();
        let input = format!("{name} {}", body_json(b));
        if b.is_symmetric() {
            out.push(TheoremCheck::new(
                "flat_bh_reversible",
                input.clone(),
                t.area_bh(),
                PI / 4.0,
                tol,
            ));
            out.push(TheoremCheck::new(
                "flat_ht_reversible",
                input.clone(),
                t.area_ht(),
                2.0 / PI,
                tol,
            ));
        }
        out.push(TheoremCheck::new(
            "flat_ht_general",
            input,
            t.area_ht(),
            1.5 / PI,
            tol,
        ));
    }
    out
}

/// Lattice and volume-product checks that accompany the flat suite.
pub fn check_geometry_of_numbers(
    lattices: &[Lattice2],
    symmetric: &[ConvexBody],
    tol: f64,
) -> Vec<TheoremCheck> {
    let mut out = Vec::new();
    for (k, l) in lattices.iter().enumerate() {
        out.push(TheoremCheck::new(
            "hermite",
            format!("lattice #{k} u={} v={}", l.u, l.v),
            l.flat_riemannian_ratio(),
            SQRT3_HALF,
            tol,
        ));
    }
    for (k, b) in symmetric.iter().enumerate() {
        let p = b.mahler_product().expect("symmetric body");
        let input = format!("symmetric #{k} {}", body_json(b));
        out.push(TheoremCheck::new(
            "mahler_lower",
            input.clone(),
            p,
            8.0,
            tol,
        ));
        out.push(TheoremCheck::new("blaschke_upper", input, PI * PI, p, tol));
    }
    out
}

/// Settings shared by the suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub graph: GraphParams,
    pub directions: usize,
    pub quad_n: usize,
    /// Sampled `(x0, z)` pairs for the bounded-distance check.
    pub distance_samples: usize,
    pub seed: u64,
    /// Tolerance of the flat-torus and lattice checks.
    pub flat_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            graph: GraphParams::default(),
            directions: 16,
            quad_n: 32,
            distance_samples: 20,
            seed: 42,
            flat_tol: FLAT_TOL,
        }
    }
}

/// Flattening checks for one field, plus the bounded-distance samples.
#[derive(Clone, Debug, Serialize)]
pub struct FlatteningReport {
    pub field: String,
    pub checks: Vec<TheoremCheck>,
    pub stencil_error: f64,
    pub metric_error: f64,
    pub systole: f64,
    pub systole_class: (i64, i64),
    pub stable_ball: Vec<[f64; 2]>,
    pub flagged_directions: Vec<(i64, i64)>,
    pub diameter: f64,
}

/// HT and BH areas do not increase, and the systole is unchanged, when the
/// torus is replaced by the flat torus of its stable norm.
pub fn check_flattening(
    name: &str,
    torus: &PeriodicTorus,
    cfg: &SuiteConfig,
) -> Result<FlatteningReport> {
    let ball = torus.stable_unit_ball(cfg.directions)?;
    let errs = torus.errors();
    let input = format!(
        "{name} h={} s={}",
        torus.graph().h(),
        torus.graph().stencil()
    );
    let missing = "outer envelope of the sampled ball did not close";
    let mut checks = Vec::new();

    let ht = torus.area_ht(cfg.quad_n);
    let (lo, hi) = ball.ht_bounds();
    let c = TheoremCheck::new(
        "flattening_ht",
        input.clone(),
        ht.value,
        hi,
        (hi - lo) + ht.error,
    );
    checks.push(if ball.outer.is_some() {
        c
    } else {
        c.failed(missing)
    });

    let bh = torus.area_bh(cfg.quad_n);
    let (lo, hi) = ball.bh_bounds();
    let c = TheoremCheck::new(
        "flattening_bh",
        input.clone(),
        bh.value,
        hi,
        (hi - lo) + bh.error,
    );
    checks.push(if ball.outer.is_some() {
        c
    } else {
        c.failed(missing)
    });

    let (sys, class) = torus.systole()?;
    let (lo, hi) = ball.systole_bounds();
    let tol = (sys.value - sys.lower()) + (hi - lo);
    let c = TheoremCheck::new(
        "flattening_systole",
        input.clone(),
        -(sys.value - hi).abs(),
        0.0,
        tol,
    )
    .with_note(format!("sys(F) = {}, sys(stable) = {hi}", sys.value));
    checks.push(if ball.outer.is_some() {
        c
    } else {
        c.failed(missing)
    });

    let diam = torus.diameter()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<(Vec2, usize)> = (0..cfg.distance_samples)
        .map(|_| {
            let x0 = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            (x0, rng.gen_range(0..ball.values.len()))
        })
        .collect();
    let dists = par::map(cfg.graph.exec, &samples, |&(x0, j)| {
        torus.distance(x0, x0 + ivec(ball.values[j].z))
    });
    let r = errs.relative();
    for (&(x0, j), d) in samples.iter().zip(dists) {
        let d = d?;
        let v = &ball.values[j];
        let gap = d.value - v.value;
        let input = format!("{name} x0={x0} z=({}, {})", v.z.0, v.z.1);
        checks.push(TheoremCheck::new(
            "bounded_distance_lower",
            input.clone(),
            gap,
            0.0,
            r * v.value,
        ));
        checks.push(TheoremCheck::new(
            "bounded_distance_upper",
            input,
            2.0 * (diam.value + diam.slack),
            gap,
            d.value - d.lower(),
        ));
    }
    Ok(FlatteningReport {
        field: name.to_string(),
        checks,
        stencil_error: errs.stencil,
        metric_error: errs.metric,
        systole: sys.value,
        systole_class: class,
        stable_ball: ball.inner.vertices().iter().map(|&p| p.into()).collect(),
        flagged_directions: ball.flagged,
        diameter: diam.value,
    })
}

fn conformal_ratio(
    f: &Expr,
    g0: Lattice2,
    params: GraphParams,
    quad_n: usize,
) -> Result<(f64, f64, String)> {
    let field = MetricField::conformal(f.source(), g0)?;
    let torus = PeriodicTorus::new(field, params)?;
    let (sys, _) = torus.systole()?;
    let mean = |n: usize| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += f.eval((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
            }
        }
        s / (n * n) as f64
    };
    let (a, b) = (mean(quad_n), mean(2 * quad_n));
    let area = g0.determinant() * b;
    let area_err = g0.determinant() * (b - a).abs();
    let ratio = area / (sys.value * sys.value);
    let grow = (1.0 + sys.rel_error) * (1.0 + sys.rel_error);
    let tol = ratio * (grow - 1.0) + area_err / (sys.value * sys.value) * grow;
    Ok((ratio, tol, format!("area={area} sys={}", sys.value)))
}

/// Systolic ratio of `f g0` against that of its translation average.
pub fn loewner_experiment(
    f: &str,
    g0: Lattice2,
    translations: usize,
    params: GraphParams,
) -> Result<(TheoremCheck, TheoremCheck)> {
    let e = Expr::parse(f)?;
    let t = translations.max(1);
    let shifts: Vec<(f64, f64)> = (0..t * t)
        .map(|k| ((k % t) as f64 / t as f64, (k / t) as f64 / t as f64))
        .collect();
    let avg = e.translation_average(&shifts);
    let (rg, tol_g, note_g) = conformal_ratio(&e, g0, params, 64)?;
    let (ra, tol_a, note_a) = conformal_ratio(&avg, g0, params, 64)?;
    let input = format!("f={f} g0=[{}, {}] translations={t}", g0.u, g0.v);
    let c1 = TheoremCheck::new("loewner_average", input.clone(), rg, ra, tol_g)
        .with_note(format!("g: {note_g}; averaged: {note_a}"));
    let c2 = TheoremCheck::new("loewner_hermite", input, ra, SQRT3_HALF, tol_a)
        .with_note(format!("flat ratio of g0 = {}", g0.flat_riemannian_ratio()));
    Ok((c1, c2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreedomRow {
    pub eps: f64,
    pub computed: f64,
    pub formula: f64,
    pub diff: f64,
}

/// BH systolic ratios of the `K_eps` family against the closed form.
pub fn systolic_freedom_sweep(eps_values: &[f64]) -> Result<Vec<FreedomRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let computed = FlatFinslerTorus::new(k_epsilon(eps)?).systolic_ratio(AreaKind::Bh);
            let formula = k_epsilon_ratio(eps);
            Ok(FreedomRow {
                eps,
                computed,
                formula,
                diff: (computed - formula).abs(),
            })
        })
        .collect()
}

pub const FREEDOM_EPS: [f64; 5] = [0.5, 0.25, 0.1, 0.05, 0.01];

pub fn freedom_checks(rows: &[FreedomRow]) -> Vec<TheoremCheck> {
    let mut out: Vec<TheoremCheck> = rows
        .iter()
        .map(|r| {
            TheoremCheck::new(
                "systolic_freedom",
                format!("eps={}", r.eps),
                0.0,
                r.diff,
                1e-12,
            )
            .with_note(format!("ratio {} vs {}", r.computed, r.formula))
        })
        .collect();
    for w in rows.windows(2) {
        out.push(TheoremCheck::new(
            "systolic_freedom_monotone",
            format!("eps {} -> {}", w[0].eps, w[1].eps),
            w[0].computed,
            w[1].computed,
            0.0,
        ));
        if w[0].computed == w[1].computed {
            let last = out.len() - 1;
            out[last].pass = false;
        }
    }
    out
}

fn grid_bodies(n: usize, mut f: impl FnMut(usize, usize) -> ConvexBody) -> Vec<ConvexBody> {
    (0..n * n).map(|k| f(k % n, k / n)).collect()
}

fn rotation(a: f64) -> [[f64; 2]; 2] {
    [[a.cos(), -a.sin()], [a.sin(), a.cos()]]
}

/// The ten fields of the flattening audit: five conformal, five body grids.
pub fn standard_fields(seed: u64) -> Result<Vec<(String, MetricField)>> {
    let mut out = Vec::new();
    let z2 = Lattice2::integer();
    let conformal = [
        ("conformal_sine", "(1+0.5*sin(2*pi*x1))^2", z2),
        (
            "conformal_wide",
            "exp(1.3862943611198906*sin(2*pi*x1)*cos(2*pi*x2))",
            z2,
        ),
        (
            "conformal_checker",
            "(1+0.3*sin(2*pi*x1)*sin(2*pi*x2))^2",
            z2,
        ),
        (
            "conformal_hexagonal",
            "(1+0.4*cos(2*pi*x2))^2",
            Lattice2::hexagonal(),
        ),
        (
            "conformal_skew",
            "1.2+0.5*cos(2*pi*(x1+x2))",
            Lattice2::new(Vec2::new(1.0, 0.0), Vec2::new(0.3, 1.1))?,
        ),
    ];
    for (name, f, g0) in conformal {
        out.push((name.to_string(), MetricField::conformal(f, g0)?));
    }
    let n = 4;
    let tau = 2.0 * PI / n as f64;
    out.push((
        "grid_squares".to_string(),
        MetricField::body_grid(
            n,
            grid_bodies(n, |i, j| {
                ConvexBody::square(1.0 + 0.25 * (tau * i as f64).cos())
                    .linear_image(rotation(0.2 * j as f64))
                    .expect("rotated square")
            }),
        )?,
    ));
    out.push((
        "grid_triangles".to_string(),
        MetricField::body_grid(
            n,
            grid_bodies(n, |i, j| {
                abt_extremal_body()
                    .scaled(0.5 + 0.15 * (tau * i as f64).sin())
                    .linear_image(rotation(PI / 2.0 * j as f64))
                    .expect("rotated triangle")
            }),
        )?,
    ));
    out.push((
        "grid_hexagons".to_string(),
        MetricField::body_grid(
            n,
            grid_bodies(n, |i, j| {
                ConvexBody::regular(6, 1.0 + 0.2 * (tau * (i + j) as f64).cos(), 0.3 * i as f64)
                    .expect("hexagon")
            }),
        )?,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // round bodies keep the grids Lipschitz with moderate constants
    let mut round = |symmetric: bool| loop {
        let b = random_body(&mut rng, symmetric);
        if b.inradius() > 0.25 {
            return b;
        }
    };
    let sym = grid_bodies(3, |_, _| round(true));
    out.push((
        "grid_random_symmetric".to_string(),
        MetricField::body_grid(3, sym)?,
    ));
    let asym = grid_bodies(3, |_, _| round(false));
    out.push((
        "grid_random_general".to_string(),
        MetricField::body_grid(3, asym)?,
    ));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Flat,
    Flattening,
    Loewner,
    Freedom,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => Suite::Flat,
            "flattening" => Suite::Flattening,
            "loewner" => Suite::Loewner,
            "freedom" => Suite::Freedom,
            "all" => Suite::All,
            other => {
                return Err(Error::PreconditionViolated(format!(
                    "unknown suite '{other}' (flat|flattening|loewner|freedom|all)"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<TheoremCheck>,
    pub fields: Vec<FlatteningReport>,
    pub freedom: Vec<FreedomRow>,
    pub summary: SuiteSummary,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Random bodies used by the flat suite.
pub fn flat_inputs(seed: u64, count: usize) -> (Vec<ConvexBody>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bodies = vec![ConvexBody::square(1.0), abt_extremal_body()];
    let mut names = vec!["square".to_string(), "abt_triangle_polar".to_string()];
    for k in 0..count {
        bodies.push(random_body(&mut rng, true));
        names.push(format!("random_symmetric#{k}"));
    }
    for k in 0..count {
        bodies.push(random_body(&mut rng, false));
        names.push(format!("random_general#{k}"));
    }
    (bodies, names)
}

/// Runs a suite with parameters fixed by `seed` and `cfg`.
pub fn run_suite(suite: Suite, seed: u64, cfg: &SuiteConfig) -> Result<Report> {
    let mut checks = Vec::new();
    let mut fields = Vec::new();
    let mut freedom = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Flat) {
        let (bodies, names) = flat_inputs(seed, 1000);
        checks.extend(check_flat_suite(&bodies, &names, cfg.flat_tol));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut lattices = vec![Lattice2::hexagonal()];
        lattices.extend((0..1000).map(|_| random_lattice(&mut rng)));
        let sym: Vec<ConvexBody> = bodies
            .iter()
            .filter(|b| b.is_symmetric())
            .cloned()
            .collect();
        checks.extend(check_geometry_of_numbers(&lattices, &sym, cfg.flat_tol));
    }
    if want(Suite::Freedom) {
        freedom = systolic_freedom_sweep(&FREEDOM_EPS)?;
        checks.extend(freedom_checks(&freedom));
    }
    if want(Suite::Loewner) {
        let cases = [
            ("1", Lattice2::hexagonal()),
            ("(1+0.5*sin(2*pi*x1))^2", Lattice2::integer()),
            (
                "1.2+0.5*cos(2*pi*(x1+x2))",
                Lattice2::new(Vec2::new(1.0, 0.0), Vec2::new(0.3, 1.1))?,
            ),
        ];
        for (f, g0) in cases {
            let (a, b) = loewner_experiment(f, g0, 4, cfg.graph)?;
            checks.push(a);
            checks.push(b);
        }
    }
    if want(Suite::Flattening) {
        let cfg = SuiteConfig { seed, ..*cfg };
        for (name, field) in standard_fields(seed)? {
            let torus = PeriodicTorus::new(field, cfg.graph)?;
            let rep = check_flattening(&name, &torus, &cfg)?;
            checks.extend(rep.checks.iter().cloned());
            fields.push(rep);
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let summary = SuiteSummary {
        total: checks.len(),
        passed,
        failed: checks.len() - passed,
    };
    let name = match suite {
        Suite::Flat => "flat",
        Suite::Flattening => "flattening",
        Suite::Loewner => "loewner",
        Suite::Freedom => "freedom",
        Suite::All => "all",
    };
    Ok(Report {
        suite: name.to_string(),
        seed,
        checks,
        fields,
        freedom,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witnesses_have_zero_margin() {
        let names = vec!["square".to_string(), "polar".to_string()];
        let checks = check_flat_suite(
            &[ConvexBody::square(1.0), abt_extremal_body()],
            &names,
            FLAT_TOL,
        );
        let bh = checks
            .iter()
            .find(|c| c.theorem_id == "flat_bh_reversible")
            .unwrap();
        assert!(bh.margin.abs() < 1e-12 && bh.pass);
        let ht = checks
            .iter()
            .rfind(|c| c.theorem_id == "flat_ht_general")
            .unwrap();
        assert!(ht.margin.abs() < 1e-12 && ht.pass);
    }

    #[test]
    fn freedom_rows() {
        let rows = systolic_freedom_sweep(&FREEDOM_EPS).unwrap();
        assert!((rows[0].computed - PI / 2.25).abs() < 1e-12);
        assert!((rows[2].formula - 0.2 * PI / 1.21).abs() < 1e-12);
        assert!(freedom_checks(&rows).iter().all(|c| c.pass));
    }

    #[test]
    fn random_bodies_are_reproducible() {
        let a = flat_inputs(7, 5);
        let b = flat_inputs(7, 5);
        assert_eq!(a.0, b.0);
        assert!(a.0[2..7].iter().all(|b| b.is_symmetric()));
    }

    #[test]
    fn check_orientation() {
        assert!(TheoremCheck::new("x", "", 1.0, 1.0 + 1e-10, 1e-9).pass);
        assert!(!TheoremCheck::new("x", "", 1.0, 1.1, 1e-9).pass);
    }
}
