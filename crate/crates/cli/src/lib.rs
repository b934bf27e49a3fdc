//! Command-line front end for `billiard-core`.
//!
//! Exit codes: 0 on success, 1 when a computation fails (the error name is
//! printed on stderr), 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use billiard_core::certificate::{
    certify_not_identity, distance_from_identity, identity_family, word_product, ShearRotationWord,
};
use billiard_core::curve::Vec2;
use billiard_core::io::{self as bio, Body, OrbitRow, OrbitTable};
use billiard_core::octagon::{self, CycleLine};
use billiard_core::outer::{
    self, frame_at, monodromy_analytic, monodromy_letters, monodromy_numeric, OuterOrbit,
};
use billiard_core::search::{self, SearchReport};
use billiard_core::svg::{self, Scene};
use billiard_core::symplectic::{self as sym, ChordState};
use billiard_core::{BilliardError, ConvexBoundary, CurveModel};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

pub const SEED_VAR: &str = "BILLIARD_SEED";
/// Smallest accepted tolerance override.
pub const MIN_TOL: f64 = 1e-14;

#[derive(Debug, Parser)]
#[command(
    name = "billiard",
    about = "Outer and symplectic billiards on convex bodies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the outer billiard map and write the trajectory as CSV.
    OuterOrbit(OuterOrbitArgs),
    /// Iterate the symplectic billiard map on a curve or ellipsoid.
    SymplecticOrbit(SymplecticArgs),
    /// Multistart search for (n, m) periodic outer billiard orbits.
    FindPeriodic(FindArgs),
    /// Periodic orbits whose first side touches a given boundary point.
    ThroughTangency(ThroughArgs),
    /// Analytic and finite-difference monodromy of a periodic orbit.
    Monodromy(MonodromyArgs),
    /// Try to certify that a shear-rotation product is not the identity.
    Certify(CertifyArgs),
    /// Emit the constant word whose product is the identity.
    IdentityFamily(IdentityArgs),
    /// Octagon table with hyperbola arcs and its 8-periodic segments.
    Octagon(OctagonArgs),
    /// Draw a curve and an orbit CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the main result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OuterOrbitArgs {
    #[arg(long)]
    curve: PathBuf,
    /// Starting point `x,y`.
    #[arg(long, value_parser = parse_point)]
    start: Vec2,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Closure tolerance below which the trajectory is reported as periodic.
    #[arg(long, default_value_t = 1e-8, value_parser = parse_tol)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SymplecticArgs {
    /// Curve or ellipsoid spec.
    #[arg(long)]
    body: PathBuf,
    /// Planar start `t_prev,t_cur`.
    #[arg(long, value_parser = parse_coords, conflicts_with_all = ["x", "y"])]
    start: Option<Coords>,
    /// Ellipsoid start points (projected onto the boundary).
    #[arg(long, value_parser = parse_coords, requires = "y")]
    x: Option<Coords>,
    #[arg(long, value_parser = parse_coords, requires = "x")]
    y: Option<Coords>,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SearchOutput {
    /// Directory receiving `orbit_<k>.csv` and `summary.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FindArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[command(flatten)]
    output: SearchOutput,
}

#[derive(Debug, Args)]
struct ThroughArgs {
    #[arg(long)]
    curve: PathBuf,
    /// Normal angle of the fixed tangency point.
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[command(flatten)]
    output: SearchOutput,
}

#[derive(Debug, Args)]
struct MonodromyArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_parser = parse_point)]
    start: Vec2,
    #[arg(long)]
    n: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5, value_parser = parse_tol)]
    h: f64,
    /// Write the shear-rotation word of the orbit as JSON.
    #[arg(long)]
    word_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    word: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OctagonArgs {
    /// Circumradius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Number of offsets per line.
    #[arg(long, default_value_t = 50)]
    offsets: usize,
    /// Smallest and largest |offset| as fractions of the radius.
    #[arg(long, default_value_t = 1e-4)]
    min_offset: f64,
    #[arg(long, default_value_t = 5e-2)]
    max_offset: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    orbit: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(v)
            } else {
                Err("values must be finite".into())
            }
        })
}

/// Comma-separated coordinates.
#[derive(Debug, Clone, PartialEq)]
struct Coords(Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    parse_list(s).map(Coords)
}

fn parse_point(s: &str) -> Result<Vec2, String> {
    match parse_list(s)?.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        v => Err(format!("expected x,y, got {} values", v.len())),
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v >= MIN_TOL && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite value >= {MIN_TOL:e}"))
    }
}

type CmdResult = Result<(), BilliardError>;

struct Ctx<'a> {
    seed: u64,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    /// Write `text` to `path`, or to stdout when no path is given.
    fn emit(&mut self, path: Option<&Path>, text: &str) -> CmdResult {
        match path {
            Some(p) => bio::write_text(p, text),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|e| BilliardError::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                }),
        }
    }

    fn say(&mut self, text: &str) -> CmdResult {
        self.emit(None, text)
    }
}

/// Fail early on outputs whose directory does not exist.
fn check_output(path: Option<&Path>) -> CmdResult {
    if let Some(p) = path {
        let dir = p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(BilliardError::Io {
                path: p.display().to_string(),
                message: "parent directory does not exist".into(),
            });
        }
    }
    Ok(())
}

fn load_curve(path: &Path) -> Result<CurveModel, BilliardError> {
    bio::load_curve(path)
}

fn outer_orbit(ctx: &mut Ctx, a: &OuterOrbitArgs) -> CmdResult {
    check_output(a.output.out.as_deref())?;
    check_output(a.output.plot.as_deref())?;
    let curve = load_curve(&a.curve)?;
    let steps = outer::iterate(&curve, a.start, a.steps)?;
    let mut points = vec![a.start];
    points.extend(steps.iter().map(|s| s.y));
    let thetas: Vec<f64> = steps.iter().map(|s| s.z.theta).collect();
    let residual = (points[points.len() - 1] - a.start).norm();
    let n = a.steps;
    let closed = if n >= 3 && residual <= a.tol {
        OuterOrbit::from_parts(&curve, points[..n].to_vec(), thetas.clone()).ok()
    } else {
        None
    };
    let table = match &closed {
        Some(orbit) => {
            let mut t = OrbitTable::from_orbit(orbit);
            let first = t.rows[0];
            t.rows.push(OrbitRow {
                index: n,
                position: points[n],
                ..first
            });
            t.closure_residual = Some(residual);
            t
        }
        None => OrbitTable::from_trajectory(&points, &thetas),
    };
    ctx.emit(a.output.out.as_deref(), &table.to_csv())?;
    if let Some(p) = &a.output.plot {
        let scene = Scene::new()
            .with_curve(&curve)
            .with_orbit(
                if closed.is_some() {
                    points[..n].to_vec()
                } else {
                    points.clone()
                },
                closed.is_some(),
            )
            .with_tangencies(steps.iter().map(|s| s.z.position));
        svg::write_svg(&scene, p)?;
    }
    Ok(())
}

fn symplectic_orbit(ctx: &mut Ctx, a: &SymplecticArgs) -> CmdResult {
    check_output(a.output.out.as_deref())?;
    check_output(a.output.plot.as_deref())?;
    match bio::load_body(&a.body)? {
        Body::Curve(curve) => {
            let start = match a.start.as_ref().map(|c| c.0.as_slice()) {
                Some([t0, t1]) => ChordState::new(*t0, *t1),
                Some(v) => {
                    return Err(BilliardError::Parse(format!(
                        "--start needs t_prev,t_cur, got {} values",
                        v.len()
                    )))
                }
                None => {
                    return Err(BilliardError::Parse(
                        "planar bodies need --start t_prev,t_cur".into(),
                    ))
                }
            };
            let states = sym::symplectic_orbit(&curve, start, a.steps)?;
            let mut all = vec![ChordState::new(f64::NAN, start.t_prev)];
            all.extend(states.iter().copied());
            ctx.emit(
                a.output.out.as_deref(),
                &bio::symplectic_csv(&all, |t| curve.point(t)),
            )?;
            if let Some(p) = &a.output.plot {
                let pts = all.iter().map(|s| curve.point(s.t_cur)).collect();
                svg::write_svg(&Scene::new().with_curve(&curve).with_orbit(pts, false), p)?;
            }
        }
        Body::Ellipsoid(body) => {
            let (Some(Coords(x)), Some(Coords(y))) = (&a.x, &a.y) else {
                return Err(BilliardError::Parse("ellipsoids need --x and --y".into()));
            };
            if x.len() != body.dim() || y.len() != body.dim() {
                return Err(BilliardError::InvalidBody(format!(
                    "start points must have dimension {}",
                    body.dim()
                )));
            }
            let mut pts = vec![
                body.project(&DVector::from_column_slice(x)),
                body.project(&DVector::from_column_slice(y)),
            ];
            for _ in 0..a.steps {
                let k = pts.len();
                let z = sym::symplectic_map_2n(&body, &pts[k - 2], &pts[k - 1])?;
                pts.push(z);
            }
            ctx.emit(a.output.out.as_deref(), &bio::ellipsoid_csv(&pts))?;
            if let Some(p) = &a.output.plot {
                let proj = pts.iter().map(|v| Vec2::new(v[0], v[1])).collect();
                svg::write_svg(&Scene::new().with_orbit(proj, false), p)?;
            }
        }
    }
    Ok(())
}

fn write_search(
    ctx: &mut Ctx,
    curve: &CurveModel,
    rep: &SearchReport,
    o: &SearchOutput,
) -> CmdResult {
    if let Some(dir) = &o.out_dir {
        for (k, orbit) in rep.orbits.iter().enumerate() {
            bio::write_text(
                &dir.join(format!("orbit_{k}.csv")),
                &OrbitTable::from_orbit(orbit).to_csv(),
            )?;
        }
        bio::write_text(
            &dir.join("summary.json"),
            &format!("{}\n", rep.summary_json()),
        )?;
    }
    if let Some(p) = &o.plot {
        let mut scene = Scene::new().with_curve(curve);
        for orbit in &rep.orbits {
            scene = scene
                .with_orbit(orbit.vertices.clone(), true)
                .with_tangencies(orbit.tangency_points(curve));
        }
        svg::write_svg(&scene, p)?;
    }
    ctx.say(&format!("{}\n", rep.summary_json()))?;
    for w in &rep.warnings {
        ctx.say(&format!("# warning: {w}\n"))?;
    }
    Ok(())
}

fn check_search_output(o: &SearchOutput) -> CmdResult {
    if let Some(d) = &o.out_dir {
        if !d.is_dir() {
            return Err(BilliardError::Io {
                path: d.display().to_string(),
                message: "output directory does not exist".into(),
            });
        }
    }
    check_output(o.plot.as_deref())
}

fn find_periodic(ctx: &mut Ctx, a: &FindArgs) -> CmdResult {
    check_search_output(&a.output)?;
    let curve = load_curve(&a.curve)?;
    let rep = search::find_orbits(&curve, a.n, a.m, a.grid, ctx.seed);
    write_search(ctx, &curve, &rep, &a.output)
}

fn through_tangency(ctx: &mut Ctx, a: &ThroughArgs) -> CmdResult {
    check_search_output(&a.output)?;
    let curve = load_curve(&a.curve)?;
    let rep = search::orbits_through_tangency(&curve, a.theta, a.n, a.m, a.grid, ctx.seed);
    write_search(ctx, &curve, &rep, &a.output)
}

fn fmt_mat(m: &outer::Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        bio::fmt_num(m[(0, 0)]),
        bio::fmt_num(m[(0, 1)]),
        bio::fmt_num(m[(1, 0)]),
        bio::fmt_num(m[(1, 1)])
    )
}

fn monodromy(ctx: &mut Ctx, a: &MonodromyArgs) -> CmdResult {
    check_output(a.word_out.as_deref())?;
    let curve = load_curve(&a.curve)?;
    let orbit = OuterOrbit::from_start(&curve, a.start, a.n)?;
    let analytic = monodromy_analytic(&curve, &orbit)?;
    let global = monodromy_numeric(&curve, a.start, a.n, a.h)?;
    let numeric = frame_at(&curve, a.start)?.conjugate(&global);
    let letters = monodromy_letters(&curve, &orbit);
    let mut text = String::new();
    text.push_str(&format!("orbit n={} m={}\n", orbit.n, orbit.winding));
    text.push_str(&format!("alpha_sum={}\n", bio::fmt_num(orbit.alpha_sum())));
    text.push_str(&format!("analytic={}\n", fmt_mat(&analytic)));
    text.push_str(&format!("numeric={}\n", fmt_mat(&numeric)));
    text.push_str(&format!(
        "max_difference={}\n",
        bio::fmt_num((analytic - numeric).amax())
    ));
    text.push_str(&format!("det={}\n", bio::fmt_num(analytic.determinant())));
    text.push_str("index,alpha,s\n");
    for (i, (al, s)) in letters.iter().enumerate() {
        text.push_str(&format!("{i},{},{}\n", bio::fmt_num(*al), bio::fmt_num(*s)));
    }
    ctx.say(&text)?;
    if let Some(p) = &a.word_out {
        let word = ShearRotationWord::from_pairs(&letters)?;
        bio::write_text(p, &bio::word_to_json(&word))?;
    }
    Ok(())
}

fn certify(ctx: &mut Ctx, a: &CertifyArgs) -> CmdResult {
    check_output(a.out.as_deref())?;
    let word = bio::parse_word(&bio::read_text(&a.word)?)?;
    let cert = certify_not_identity(&word);
    ctx.emit(a.out.as_deref(), &cert.report())
}

fn identity(ctx: &mut Ctx, a: &IdentityArgs) -> CmdResult {
    check_output(a.out.as_deref())?;
    let word = identity_family(a.n)?;
    let dist = distance_from_identity(&word_product(&word));
    ctx.emit(a.out.as_deref(), &format!("{}\n", bio::word_to_json(&word)))?;
    if a.out.is_some() {
        ctx.say(&format!(
            "n={} distance_from_identity={}\n",
            a.n,
            bio::fmt_num(dist)
        ))?;
    }
    Ok(())
}

fn octagon_cmd(ctx: &mut Ctx, a: &OctagonArgs) -> CmdResult {
    check_output(a.output.out.as_deref())?;
    check_output(a.output.plot.as_deref())?;
    if !(a.min_offset > 0.0 && a.max_offset > a.min_offset) {
        return Err(BilliardError::InvalidBody(
            "offset range needs 0 < min-offset < max-offset".into(),
        ));
    }
    let table = octagon::build_table(a.radius)?;
    let audit = octagon::consistency_audit(&table);
    let offsets = octagon::offset_grid(a.radius, a.min_offset, a.max_offset, a.offsets);
    let mut csv = String::from("line,offset,closure_residual,symmetry_residual\n");
    let mut cycles = Vec::new();
    let mut worst: f64 = 0.0;
    for line in [CycleLine::X8X1, CycleLine::X1X2] {
        for r in octagon::sweep(&table, line, &offsets) {
            let c = r?;
            worst = worst.max(c.closure_residual);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                line.name(),
                bio::fmt_num(c.offset),
                bio::fmt_num(c.closure_residual),
                bio::fmt_num(c.symmetry_residual)
            ));
            cycles.push(c);
        }
    }
    let mut summary = String::new();
    summary.push_str(&format!("radius={}\n", bio::fmt_num(table.radius)));
    for (k, arc) in table.arcs.iter().enumerate() {
        let (lo, hi) = arc.window_u();
        summary.push_str(&format!(
            "h{}: origin=({}, {}) c={} window_u=[{}, {}]\n",
            k + 1,
            bio::fmt_num(arc.origin.x),
            bio::fmt_num(arc.origin.y),
            bio::fmt_num(arc.c),
            bio::fmt_num(lo),
            bio::fmt_num(hi)
        ));
    }
    summary.push_str(&format!(
        "audit={}\n",
        if audit.passed() {
            "pass".to_string()
        } else {
            audit
                .violations
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(",")
        }
    ));
    summary.push_str(&format!(
        "cycles={} max_closure_residual={}\n",
        cycles.len(),
        bio::fmt_num(worst)
    ));
    ctx.say(&summary)?;
    if let Some(p) = &a.output.out {
        bio::write_text(p, &csv)?;
    }
    if let Some(p) = &a.output.plot {
        svg::write_svg(&Scene::octagon(&table, &cycles), p)?;
    }
    Ok(())
}

fn plot(ctx: &mut Ctx, a: &PlotArgs) -> CmdResult {
    check_output(a.out.as_deref())?;
    let mut scene = Scene::new();
    let curve = a.curve.as_deref().map(load_curve).transpose()?;
    if let Some(c) = &curve {
        scene = scene.with_curve(c);
    }
    if let Some(p) = &a.orbit {
        let table = OrbitTable::parse(&bio::read_text(p)?)?;
        let mut pts = table.positions();
        let closed = table.winding.is_some();
        if closed && pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if let Some(c) = &curve {
            let tang = table
                .rows
                .iter()
                .filter(|r| r.theta_tangency.is_finite())
                .take(pts.len())
                .map(|r| c.point(r.theta_tangency))
                .collect::<Vec<_>>();
            scene = scene.with_tangencies(tang);
        }
        scene = scene.with_orbit(pts, closed);
    }
    ctx.emit(a.out.as_deref(), &svg::emit_svg(&scene))
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> CmdResult {
    match cmd {
        Command::OuterOrbit(a) => outer_orbit(ctx, a),
        Command::SymplecticOrbit(a) => symplectic_orbit(ctx, a),
        Command::FindPeriodic(a) => find_periodic(ctx, a),
        Command::ThroughTangency(a) => through_tangency(ctx, a),
        Command::Monodromy(a) => monodromy(ctx, a),
        Command::Certify(a) => certify(ctx, a),
        Command::IdentityFamily(a) => identity(ctx, a),
        Command::Octagon(a) => octagon_cmd(ctx, a),
        Command::Plot(a) => plot(ctx, a),
    }
}

/// Run with explicit seed and streams; `argv[0]` is the program name.
pub fn run_with<I, T>(argv: I, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut ctx = Ctx { seed, out };
    match dispatch(&mut ctx, &cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            1
        }
    }
}

/// Parse `BILLIARD_SEED`; unset means 0.
pub fn seed_from_env(value: Option<&str>) -> Result<u64, String> {
    match value {
        None => Ok(0),
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_VAR} must be a non-negative integer, got {s:?}")),
    }
}

/// Entry point used by the binary: real stdio and the environment seed.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut err = std::io::stderr();
    let env = std::env::var(SEED_VAR).ok();
    let seed = match seed_from_env(env.as_deref()) {
        Ok(s) => s,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let mut out = std::io::stdout().lock();
    run_with(argv, seed, &mut out, &mut err)
}
