use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use systolic_core::flat_finsler::k_epsilon;
use systolic_core::periodic::GraphParams;
use systolic_core::polygon_reduce::{abt_reduce, mahler_reduce};
use systolic_core::verify::{self, Suite, SuiteConfig, TheoremCheck, FLAT_TOL};
use systolic_core::{
    svg, AreaKind, ConvexBody, FlatFinslerTorus, Lattice2, MetricField, PeriodicTorus, Vec2,
};

#[derive(Parser, Debug)]
#[command(
    name = "systolic-finsler",
    version,
    about = "Systoles, areas and stable norms of Finsler two-tori"
)]
struct Cli {
    /// Tolerance of the flat inequality checks.
    #[arg(long, global = true, default_value_t = FLAT_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, env = "SYSTOLIC_THREADS")]
    threads: Option<usize>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Write a CSV table here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write an SVG figure here.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Polygonal convex bodies.
    Body {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        op: BodyOp,
    },
    /// Planar lattices.
    Lattice {
        /// Basis as "u1,u2;v1,v2".
        #[arg(long)]
        basis: String,
        #[arg(long, value_enum)]
        op: LatticeOp,
    },
    /// Flat Finsler tori.
    Flat {
        #[arg(long = "in", conflicts_with = "family")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FlatOp::Ratio)]
        op: FlatOp,
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Sweep of eps as "from:to:count".
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Periodic metrics on the torus.
    Periodic {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        op: PeriodicOp,
        /// Homology class "p,q".
        #[arg(long, default_value = "1,0")]
        z: String,
        /// Endpoints "x1,x2" for `--op distance`.
        #[arg(long, default_value = "0,0")]
        from: String,
        #[arg(long, default_value = "0.5,0.5")]
        to: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Polygon reduction drivers.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ReduceMode,
        /// Write the JSON trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Integer lines m.x = 1 with |m|^2 <= bound.
    Render {
        #[arg(long, default_value_t = 50)]
        bound: i64,
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 1.0 / 64.0)]
    h: f64,
    #[arg(long, default_value_t = 4)]
    stencil: usize,
    #[arg(long = "quad-n", default_value_t = 32)]
    quad_n: usize,
    #[arg(long, default_value_t = 16)]
    directions: usize,
}

impl GridArgs {
    fn params(&self) -> Result<GraphParams> {
        if !(self.h > 0.0 && self.h <= 0.25) {
            bail!("--h must lie in (0, 1/4], got {}", self.h);
        }
        if !(1..=16).contains(&self.stencil) {
            bail!("--stencil must lie in 1..=16, got {}", self.stencil);
        }
        if !(2..=4096).contains(&self.quad_n) {
            bail!("--quad-n must lie in 2..=4096, got {}", self.quad_n);
        }
        if !(4..=256).contains(&self.directions) {
            bail!("--directions must lie in 4..=256, got {}", self.directions);
        }
        Ok(GraphParams {
            h: self.h,
            stencil: self.stencil,
            ..GraphParams::default()
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BodyOp {
    Polar,
    Area,
    Mahler,
    Minkowski,
    Lines,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LatticeOp {
    Det,
    Shortest,
    Hermite,
    Reduce,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FlatOp {
    Sys,
    Bh,
    Ht,
    Ratio,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Keps,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PeriodicOp {
    Sys,
    Bh,
    Ht,
    Stable,
    Ball,
    Distance,
    Diameter,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ReduceMode {
    Mahler,
    Abt,
}

/// Input problems map to exit code 2, failed checks to 1.
struct Outcome {
    pass: bool,
}

const OK: Outcome = Outcome { pass: true };

fn exit_code(r: &Result<Outcome>) -> u8 {
    match r {
        Ok(o) if o.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = run(&cli);
    if let Err(e) = &r {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&r))
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        systolic_core::par::set_threads(n);
    }
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be a finite nonnegative number");
    }
    match &cli.cmd {
        Command::Body { input, op } => body(cli, &load_body(input)?, *op),
        Command::Lattice { basis, op } => lattice(cli, &parse_basis(basis)?, *op),
        Command::Flat {
            input,
            op,
            family,
            eps,
            sweep,
        } => {
            if let Some(s) = sweep {
                return keps_sweep(cli, s);
            }
            let k = match (input, family) {
                (Some(p), _) => load_body(p)?,
                (None, Some(Family::Keps)) => k_epsilon(*eps)?,
                (None, None) => bail!("flat needs --in or --family"),
            };
            flat(cli, &k, *op)
        }
        Command::Periodic {
            input,
            op,
            z,
            from,
            to,
            grid,
        } => {
            let text = read(input)?;
            let field = MetricField::from_json(&text)
                .with_context(|| format!("reading {}", input.display()))?;
            let torus = PeriodicTorus::new(field, grid.params()?)?;
            periodic(
                cli,
                &torus,
                *op,
                parse_pair(z)?,
                (parse_vec(from)?, parse_vec(to)?),
                grid,
            )
        }
        Command::Reduce { input, mode, trace } => {
            reduce(cli, &load_body(input)?, *mode, trace.as_deref())
        }
        Command::Verify {
            suite,
            report,
            grid,
        } => run_verify(cli, suite, report.as_deref(), grid),
        Command::Render { bound, overlay } => {
            if *bound < 1 {
                bail!("--bound must be at least 1");
            }
            let body = overlay.as_deref().map(load_body).transpose()?;
            let doc = svg::integer_lines(*bound, body.as_ref());
            match &cli.svg {
                Some(p) => write(p, &doc)?,
                None => print!("{doc}"),
            }
            Ok(OK)
        }
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

fn write(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).with_context(|| format!("cannot write {}", p.display()))
}

fn load_body(p: &Path) -> Result<ConvexBody> {
    let text = read(p)?;
    serde_json::from_str(&text).with_context(|| format!("invalid body in {}", p.display()))
}

fn parse_nums(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number '{t}'"))
        })
        .collect()
}

fn parse_vec(s: &str) -> Result<Vec2> {
    match parse_nums(s)?[..] {
        [x, y] if x.is_finite() && y.is_finite() => Ok(Vec2::new(x, y)),
        _ => bail!("expected two finite numbers 'x,y', got '{s}'"),
    }
}

fn parse_pair(s: &str) -> Result<(i64, i64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => {
            let z = (a.parse()?, b.parse()?);
            if z == (0, 0) {
                bail!("--z must be nonzero");
            }
            Ok(z)
        }
        _ => bail!("expected an integer pair 'p,q', got '{s}'"),
    }
}

fn parse_basis(s: &str) -> Result<Lattice2> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        bail!("basis must look like 'u1,u2;v1,v2'");
    }
    Ok(Lattice2::new(parse_vec(rows[0])?, parse_vec(rows[1])?)?)
}

fn emit(cli: &Cli, value: Value, text: &str) {
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("json value")
        );
    } else {
        println!("{text}");
    }
}

fn check_line(c: &TheoremCheck) -> String {
    format!(
        "{} {}: lhs={} rhs={} margin={:+e} tol={:e}",
        if c.pass { "PASS" } else { "FAIL" },
        c.theorem_id,
        c.lhs,
        c.rhs,
        c.margin,
        c.tolerance
    )
}

fn body(cli: &Cli, k: &ConvexBody, op: BodyOp) -> Result<Outcome> {
    if let Some(p) = &cli.svg {
        write(p, &svg::body_and_polar(k))?;
    }
    match op {
        BodyOp::Polar => {
            let polar = k.polar();
            emit(
                cli,
                serde_json::to_value(&polar)?,
                &serde_json::to_string(&polar)?,
            );
            Ok(OK)
        }
        BodyOp::Area => {
            let a = k.area();
            emit(cli, json!({ "area": a }), &format!("area {a}"));
            Ok(OK)
        }
        BodyOp::Mahler => {
            let p = k.mahler_product()?;
            let pi2 = std::f64::consts::PI.powi(2);
            let checks = [
                TheoremCheck::new("mahler_lower", "input", p, 8.0, cli.tol),
                TheoremCheck::new("blaschke_upper", "input", -p, -pi2, cli.tol),
            ];
            report_checks(
                cli,
                json!({ "mahler_product": p }),
                &format!("mahler_product {p}"),
                &checks,
            )
        }
        BodyOp::Minkowski => {
            let trivial = k.interior_lattice_trivial();
            let a = k.area();
            let mut checks = Vec::new();
            if k.is_symmetric() && trivial {
                checks.push(TheoremCheck::new("minkowski", "input", -a, -4.0, cli.tol));
            }
            let text = format!(
                "symmetric {}\ninterior_lattice_trivial {trivial}\narea {a}",
                k.is_symmetric()
            );
            let v = json!({ "symmetric": k.is_symmetric(), "interior_lattice_trivial": trivial, "area": a });
            report_checks(cli, v, &text, &checks)
        }
        BodyOp::Lines => {
            let meets = k.meets_all_integer_lines();
            let a = k.area();
            let mut checks = Vec::new();
            if meets {
                checks.push(TheoremCheck::new(
                    "integer_lines_area",
                    "input",
                    a,
                    1.5,
                    cli.tol,
                ));
            }
            let v = json!({ "meets_all_integer_lines": meets, "area": a });
            report_checks(
                cli,
                v,
                &format!("meets_all_integer_lines {meets}\narea {a}"),
                &checks,
            )
        }
    }
}

fn report_checks(
    cli: &Cli,
    mut value: Value,
    text: &str,
    checks: &[TheoremCheck],
) -> Result<Outcome> {
    let pass = checks.iter().all(|c| c.pass);
    if cli.json {
        value["checks"] = serde_json::to_value(checks)?;
        emit(cli, value, "");
    } else {
        println!("{text}");
        for c in checks {
            println!("{}", check_line(c));
        }
    }
    Ok(Outcome { pass })
}

fn lattice(cli: &Cli, l: &Lattice2, op: LatticeOp) -> Result<Outcome> {
    match op {
        LatticeOp::Det => {
            let d = l.determinant();
            emit(
                cli,
                json!({ "determinant": d }),
                &format!("determinant {d}"),
            );
        }
        LatticeOp::Shortest => {
            let (v, n) = l.shortest_vector();
            emit(
                cli,
                json!({ "vector": [v.x, v.y], "norm_sq": n }),
                &format!("shortest {},{}\nnorm_sq {n}", v.x, v.y),
            );
        }
        LatticeOp::Hermite => {
            let g = l.hermite_invariant();
            let ratio = l.flat_riemannian_ratio();
            let check = TheoremCheck::new("hermite", "input", ratio, verify::SQRT3_HALF, cli.tol);
            let text = format!("hermite_invariant {g}\narea_over_sys2 {ratio}");
            let v = json!({ "hermite_invariant": g, "area_over_sys2": ratio });
            return report_checks(cli, v, &text, &[check]);
        }
        LatticeOp::Reduce => {
            let r = l.reduced();
            emit(
                cli,
                json!({ "u": [r.u.x, r.u.y], "v": [r.v.x, r.v.y] }),
                &format!("{},{};{},{}", r.u.x, r.u.y, r.v.x, r.v.y),
            );
        }
    }
    Ok(OK)
}

fn flat(cli: &Cli, k: &ConvexBody, op: FlatOp) -> Result<Outcome> {
    let t = FlatFinslerTorus::new(k.clone());
    match op {
        FlatOp::Sys => {
            let (s, z) = t.systole();
            emit(
                cli,
                json!({ "systole": s, "class": [z.0, z.1] }),
                &format!("systole {s}\nclass {},{}", z.0, z.1),
            );
        }
        FlatOp::Bh => {
            let a = t.area_bh();
            emit(cli, json!({ "area_bh": a }), &format!("area_bh {a}"));
        }
        FlatOp::Ht => {
            let a = t.area_ht();
            emit(cli, json!({ "area_ht": a }), &format!("area_ht {a}"));
        }
        FlatOp::Ratio => {
            let bh = t.systolic_ratio(AreaKind::Bh);
            let ht = t.systolic_ratio(AreaKind::Ht);
            emit(
                cli,
                json!({ "bh_ratio": bh, "ht_ratio": ht }),
                &format!("bh_ratio {bh}\nht_ratio {ht}"),
            );
        }
    }
    Ok(OK)
}

fn keps_sweep(cli: &Cli, spec: &str) -> Result<Outcome> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (a, b, n) = match parts[..] {
        [a, b, n] => (a.parse::<f64>()?, b.parse::<f64>()?, n.parse::<usize>()?),
        _ => bail!("--sweep must look like 'from:to:count'"),
    };
    if !(a > 0.0 && b > 0.0 && a <= 1.0 && b <= 1.0) || n < 1 {
        bail!("--sweep needs 0 < from, to <= 1 and count >= 1");
    }
    let eps: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let rows = verify::systolic_freedom_sweep(&eps)?;
    if let Some(p) = &cli.csv {
        let mut w = csv::Writer::from_path(p)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let pass = rows.iter().all(|r| r.diff <= 1e-12);
    let mut text = String::from("eps,computed,formula,diff");
    for r in &rows {
        text.push_str(&format!(
            "\n{},{},{},{:e}",
            r.eps, r.computed, r.formula, r.diff
        ));
    }
    emit(cli, serde_json::to_value(&rows)?, &text);
    Ok(Outcome { pass })
}

fn periodic(
    cli: &Cli,
    torus: &PeriodicTorus,
    op: PeriodicOp,
    z: (i64, i64),
    ends: (Vec2, Vec2),
    grid: &GridArgs,
) -> Result<Outcome> {
    let errs = torus.errors();
    match op {
        PeriodicOp::Sys => {
            let (d, c) = torus.systole()?;
            emit(
                cli,
                json!({ "systole": d, "class": [c.0, c.1], "errors": errs }),
                &format!(
                    "systole {} (lower {})\nclass {},{}",
                    d.value,
                    d.lower(),
                    c.0,
                    c.1
                ),
            );
        }
        PeriodicOp::Bh | PeriodicOp::Ht => {
            let (name, a) = match op {
                PeriodicOp::Bh => ("area_bh", torus.area_bh(grid.quad_n)),
                _ => ("area_ht", torus.area_ht(grid.quad_n)),
            };
            emit(
                cli,
                json!({ name: a }),
                &format!("{name} {} (quadrature error {:e})", a.value, a.error),
            );
        }
        PeriodicOp::Distance => {
            let d = torus.distance(ends.0, ends.1)?;
            emit(
                cli,
                json!({ "distance": d }),
                &format!("distance {} (lower {})", d.value, d.lower()),
            );
        }
        PeriodicOp::Diameter => {
            let d = torus.diameter()?;
            emit(
                cli,
                json!({ "diameter": d }),
                &format!("diameter {} (slack {})", d.value, d.slack),
            );
        }
        PeriodicOp::Stable => {
            let v = torus.stable_norm(z)?;
            let text = format!(
                "stable_norm {},{} {} in [{}, {}]",
                z.0, z.1, v.value, v.lower, v.upper
            );
            if cli.svg.is_some() {
                ball(cli, torus, grid.directions, false)?;
            }
            emit(cli, serde_json::to_value(&v)?, &text);
        }
        PeriodicOp::Ball => ball(cli, torus, grid.directions, true)?,
    }
    Ok(OK)
}

fn ball(cli: &Cli, torus: &PeriodicTorus, directions: usize, print: bool) -> Result<()> {
    let est = torus.stable_unit_ball(directions)?;
    if let Some(p) = &cli.svg {
        let samples: Vec<Vec2> = est
            .values
            .iter()
            .map(|v| Vec2::new(v.z.0 as f64, v.z.1 as f64) / v.value)
            .collect();
        write(
            p,
            &svg::stable_ball(&est.inner, est.outer.as_ref(), &samples),
        )?;
    }
    if let Some(p) = &cli.csv {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["p", "q", "value", "lower", "upper"])?;
        for v in &est.values {
            w.write_record(&[
                v.z.0.to_string(),
                v.z.1.to_string(),
                v.value.to_string(),
                v.lower.to_string(),
                v.upper.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if print {
        let mut text = String::new();
        for v in &est.values {
            text.push_str(&format!("{},{} {}\n", v.z.0, v.z.1, v.value));
        }
        text.push_str(&format!("inner {}", serde_json::to_string(&est.inner)?));
        if !est.flagged.is_empty() {
            text.push_str(&format!("\nflagged {:?}", est.flagged));
        }
        emit(cli, serde_json::to_value(&est)?, &text);
    }
    Ok(())
}

fn reduce(
    cli: &Cli,
    p: &ConvexBody,
    mode: ReduceMode,
    trace_out: Option<&Path>,
) -> Result<Outcome> {
    let (last, trace) = match mode {
        ReduceMode::Mahler => mahler_reduce(p)?,
        ReduceMode::Abt => abt_reduce(p)?,
    };
    if let Some(path) = trace_out {
        write(path, &serde_json::to_string_pretty(&trace)?)?;
    }
    if let Some(path) = &cli.svg {
        write(path, &svg::trace(&trace))?;
    }
    let m = trace.monitored();
    let (first, end) = (m[0], *m.last().unwrap_or(&m[0]));
    let id = match mode {
        ReduceMode::Mahler => "mahler_monotone",
        ReduceMode::Abt => "abt_monotone",
    };
    let worst = m.windows(2).map(|w| w[0] - w[1]).fold(0.0_f64, f64::min);
    let check = TheoremCheck::new(id, "input", worst, 0.0, cli.tol);
    let text = format!(
        "steps {}\nmonitored {first} -> {end}\nfinal {}",
        trace.steps.len(),
        serde_json::to_string(&last)?
    );
    let v = json!({ "steps": trace.steps.len(), "initial": first, "final_monitored": end, "final": last });
    report_checks(cli, v, &text, &[check])
}

fn run_verify(
    cli: &Cli,
    suite: &str,
    report_out: Option<&Path>,
    grid: &GridArgs,
) -> Result<Outcome> {
    let suite: Suite = suite.parse()?;
    let cfg = SuiteConfig {
        graph: grid.params()?,
        directions: grid.directions,
        quad_n: grid.quad_n,
        seed: cli.seed,
        flat_tol: cli.tol,
        ..SuiteConfig::default()
    };
    let report = verify::run_suite(suite, cli.seed, &cfg)?;
    let doc = serde_json::to_string_pretty(&report)?;
    if let Some(p) = report_out {
        write(p, &doc)?;
    }
    if let Some(p) = &cli.csv {
        let mut w = csv::Writer::from_path(p)?;
        for c in &report.checks {
            w.serialize(c)?;
        }
        w.flush()?;
    }
    if cli.json {
        println!("{doc}");
    } else {
        // one line per theorem id, in first-seen order
        let mut ids: Vec<&str> = Vec::new();
        for c in &report.checks {
            if !ids.contains(&c.theorem_id.as_str()) {
                ids.push(&c.theorem_id);
            }
        }
        for id in ids {
            let group: Vec<&TheoremCheck> = report
                .checks
                .iter()
                .filter(|c| c.theorem_id == id)
                .collect();
            let failed = group.iter().filter(|c| !c.pass).count();
            let worst = group.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
            println!(
                "{} {id}: {}/{} passed, smallest margin {worst:+e}",
                if failed == 0 { "PASS" } else { "FAIL" },
                group.len() - failed,
                group.len()
            );
        }
        for c in report.checks.iter().filter(|c| !c.pass) {
            println!("  {} [{}] {}", check_line(c), c.input, c.note);
        }
        println!(
            "{} checks, {} passed, {} failed",
            report.summary.total, report.summary.passed, report.summary.failed
        );
    }
    Ok(Outcome {
        pass: report.all_pass(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Outcome { pass: true })), 0);
        assert_eq!(exit_code(&Ok(Outcome { pass: false })), 1);
        assert_eq!(exit_code(&Err(anyhow::anyhow!("bad input"))), 2);
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_pair("5, -2").unwrap(), (5, -2));
        assert!(parse_pair("0,0").is_err());
        assert!(parse_pair("1.5,0").is_err());
        assert_eq!(parse_vec("0.25,1").unwrap(), Vec2::new(0.25, 1.0));
        assert!(parse_vec("nan,1").is_err());
        let l = parse_basis("1,0;0.5,0.8660254037844386").unwrap();
        assert!((l.flat_riemannian_ratio() - verify::SQRT3_HALF).abs() < 1e-12);
    }
}
