//! `meshdmp`: mesh validation, synthetic surfaces, training and rollout of
//! periodic movement primitives, geodesic queries and timing.
//!
//! Exit codes: 0 on success, 1 when the geometry or numerics reject the
//! input, 2 on unreadable or malformed input.

mod eval;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use meshdmp_core::bench::{bench_mesh, bench_table, format_duration, format_table, BenchConfig, BenchRow};
use meshdmp_core::dmp::{fit, frames_along, project_demonstration, rollout, rollout_partial, FitParams, ProjectionOptions};
use meshdmp_core::io::{self as mio, PointSpec};
use meshdmp_core::manifold::MeshManifold;
use meshdmp_core::mesh::{load_mesh, write_obj, MeshFormat};
use meshdmp_core::oracle::{shoot_geodesic, ParametricSurface, Vec2};
use meshdmp_core::par::Parallelism;
use meshdmp_core::surface::{
    generate_demo_curve, generate_graph_mesh, generate_preset_mesh, DemoCurve, GraphFn, Preset, TableMesh,
};
use meshdmp_core::{Error, Mesh, SurfacePoint, Vec3};

#[derive(Parser)]
#[command(name = "meshdmp", version, about = "Periodic movement primitives on triangle meshes")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a mesh is manifold and consistently oriented.
    Validate {
        mesh: PathBuf,
        /// Adjacent normals with a dot product at or below this are flagged.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long)]
        format: Option<MeshFormat>,
    },
    /// Generate a synthetic mesh as OBJ.
    Surface {
        #[command(subcommand)]
        kind: SurfaceCmd,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Sample a planar curve lifted onto a height field, as demo CSV.
    Demo {
        /// `lemniscate:S`, `circle:R` or `ellipse:A,B`.
        #[arg(long, default_value = "lemniscate:1.5")]
        curve: String,
        #[arg(long, value_enum, default_value_t = Height::Bumps)]
        surface: Height,
        #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
        center: [f64; 2],
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        period: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a primitive to a demonstration.
    Train(TrainArgs),
    /// Roll a trained primitive out on a mesh, as trajectory CSV.
    Integrate(IntegrateArgs),
    /// Geodesic polyline between two points, as CSV.
    Geodesic {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long, allow_hyphen_values = true)]
        from: PointSpec,
        #[arg(long, allow_hyphen_values = true)]
        to: PointSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `Log_from(to)` as JSON.
    Logmap {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long, allow_hyphen_values = true)]
        from: PointSpec,
        #[arg(long, allow_hyphen_values = true)]
        to: PointSpec,
    },
    /// `Exp_at(vec)` as JSON.
    Expmap {
        #[command(flatten)]
        mesh: MeshArg,
        #[arg(long, allow_hyphen_values = true)]
        at: PointSpec,
        /// Vector `x,y,z`, turned into the tangent plane with its length kept.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        vec: [f64; 3],
    },
    /// Geodesics of smooth parametric surfaces.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Time geodesic solver builds and queries.
    Bench(BenchArgs),
    /// Position RMSE of a trajectory against one demonstration period.
    Eval {
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
    },
}

#[derive(Args)]
struct MeshArg {
    #[arg(long = "mesh")]
    path: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Height {
    Zero,
    Bumps,
    Fender,
}

impl From<Height> for GraphFn {
    fn from(h: Height) -> GraphFn {
        match h {
            Height::Zero => GraphFn::Zero,
            Height::Bumps => GraphFn::Bumps,
            Height::Fender => GraphFn::Fender,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableName {
    GeneratedSurface,
    TorusSimple,
    Torus,
    BunnySimple,
    Bunny,
    Fender,
}

impl From<TableName> for TableMesh {
    fn from(t: TableName) -> TableMesh {
        match t {
            TableName::GeneratedSurface => TableMesh::GeneratedSurface,
            TableName::TorusSimple => TableMesh::TorusSimple,
            TableName::Torus => TableMesh::Torus,
            TableName::BunnySimple => TableMesh::BunnySimple,
            TableName::Bunny => TableMesh::Bunny,
            TableName::Fender => TableMesh::Fender,
        }
    }
}

#[derive(Subcommand)]
enum SurfaceCmd {
    /// Height field `z = f(x, y)` on a uniform grid.
    Graph {
        #[arg(long = "fn", value_enum, default_value_t = Height::Bumps)]
        fun: Height,
        #[arg(long, value_parser = parse_quad, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        domain: [f64; 4],
        /// Vertices along x and y.
        #[arg(long, value_parser = parse_grid, default_value = "28,28")]
        grid: (usize, usize),
    },
    Torus {
        #[arg(long, default_value_t = 2.0)]
        major: f64,
        #[arg(long, default_value_t = 0.8)]
        minor: f64,
        #[arg(long, default_value_t = 50)]
        n_u: usize,
        #[arg(long, default_value_t = 20)]
        n_v: usize,
    },
    Icosphere {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 4)]
        subdivisions: u32,
    },
    /// Lumpy closed genus-0 surface.
    Blob {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 40)]
        rings: usize,
        #[arg(long, default_value_t = 50)]
        segments: usize,
    },
    /// One of the meshes of the timing table.
    Table {
        #[arg(value_enum)]
        name: TableName,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Integrate the geodesic equation and write `s,u1,u2,x,y,z` rows.
    Shoot {
        #[arg(long, value_enum, default_value_t = SmoothKind::Sphere)]
        surface: SmoothKind,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 2.0)]
        major: f64,
        #[arg(long, default_value_t = 0.8)]
        minor: f64,
        /// Height function for `--surface graph`.
        #[arg(long = "fn", value_enum, default_value_t = Height::Bumps)]
        fun: Height,
        #[arg(long, value_parser = parse_quad, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        domain: [f64; 4],
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        u0: [f64; 2],
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        du0: [f64; 2],
        #[arg(long)]
        length: f64,
        /// RK4 steps; defaults to 1000 per unit length.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothKind {
    Plane,
    Sphere,
    Torus,
    Graph,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    mesh: MeshArg,
    /// Demonstration CSV with columns t,x,y,z,vx,vy,vz.
    #[arg(long)]
    demo: PathBuf,
    /// Centre of the rhythmic motion.
    #[arg(long, allow_hyphen_values = true)]
    goal: PointSpec,
    #[arg(long, default_value_t = 22.0)]
    alpha: f64,
    /// Defaults to alpha / 4.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 20)]
    n_basis: usize,
    /// Seconds per radian of phase; defaults to period / 2π.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    mesh: MeshArg,
    #[arg(long)]
    model: PathBuf,
    /// Defaults to the model's start point.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<PointSpec>,
    /// Defaults to the model's goal.
    #[arg(long, allow_hyphen_values = true)]
    goal: Option<PointSpec>,
    #[arg(long)]
    duration: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// JSON schedule of centre moves.
    #[arg(long)]
    centers: Option<PathBuf>,
    /// Append filtered tool orientations as quaternions.
    #[arg(long)]
    poses: bool,
    /// Orientation low-pass time constant in seconds.
    #[arg(long, default_value_t = 0.05)]
    filter_tau: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Meshes to time; the timing-table meshes when absent.
    #[arg(long)]
    mesh: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    sources: usize,
    #[arg(long, default_value_t = 20)]
    queries: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Run independent builds on all cores.
    #[arg(long)]
    parallel: bool,
    /// Rows as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Failure with its exit code.
enum Failure {
    Core(Error),
    /// Input accepted but rejected by the geometry.
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

fn parse_numbers<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers"))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_numbers(s)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_numbers(s)
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    parse_numbers(s)
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad count {x:?}"));
    Ok((p(a)?, p(b)?))
}

fn parse_curve(s: &str) -> Result<DemoCurve, Failure> {
    let bad = || Failure::Core(Error::Parse { line: 0, message: format!("bad curve {s:?}") });
    let (kind, args) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (kind, nums.as_slice()) {
        ("lemniscate", [scale]) => Ok(DemoCurve::Lemniscate { scale: *scale }),
        ("circle", [radius]) => Ok(DemoCurve::Circle { radius: *radius }),
        ("ellipse", [a, b]) => Ok(DemoCurve::Ellipse { a: *a, b: *b }),
        _ => Err(bad()),
    }
}

/// Buffered file, or stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn stdout_error(e: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn print_json(value: &serde_json::Value) -> CmdResult {
    let mut out = io::stdout().lock();
    mio::write_json(value, &mut out)?;
    writeln!(out).map_err(stdout_error)?;
    Ok(())
}

fn point_json(p: &SurfacePoint) -> serde_json::Value {
    json!({
        "face": p.face,
        "bary": p.bary,
        "position": [p.position.x, p.position.y, p.position.z],
    })
}

fn load(path: &Path) -> Result<Mesh, Error> {
    let mesh = load_mesh(path, None)?;
    info!("{}: {} vertices, {} faces", path.display(), mesh.n_vertices(), mesh.n_faces());
    Ok(mesh)
}

fn cmd_validate(path: &Path, threshold: f64, format: Option<MeshFormat>) -> CmdResult {
    let mesh = load_mesh(path, format)?;
    let report = mesh.validate(threshold);
    let mut out = io::stdout().lock();
    mio::write_json(&report, &mut out)?;
    writeln!(out).map_err(stdout_error)?;
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Domain(format!(
            "{} non-manifold edges, {} orientation violations",
            report.non_manifold_edges.len(),
            report.orientation_violations.len()
        )))
    }
}

fn cmd_surface(kind: SurfaceCmd, out: Option<&Path>) -> CmdResult {
    let mesh = match kind {
        SurfaceCmd::Graph { fun, domain, grid } => generate_graph_mesh(fun.into(), domain, grid)?,
        SurfaceCmd::Torus { major, minor, n_u, n_v } => generate_preset_mesh(Preset::Torus { major, minor, n_u, n_v })?,
        SurfaceCmd::Icosphere { radius, subdivisions } => {
            generate_preset_mesh(Preset::Icosphere { radius, subdivisions })?
        }
        SurfaceCmd::Blob { radius, rings, segments } => generate_preset_mesh(Preset::Blob { radius, rings, segments })?,
        SurfaceCmd::Table { name } => TableMesh::from(name).generate()?,
    };
    let mut w = sink(out)?;
    write_obj(&mesh, &mut w).map_err(stdout_error)?;
    w.flush().map_err(stdout_error)?;
    eprintln!("{} vertices, {} faces", mesh.n_vertices(), mesh.n_faces());
    Ok(())
}

fn cmd_demo(curve: &str, surface: Height, center: [f64; 2], samples: usize, period: f64, out: Option<&Path>) -> CmdResult {
    let demo = generate_demo_curve(parse_curve(curve)?, center, surface.into(), samples, period)?;
    mio::write_demo_csv(&demo, sink(out)?)?;
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let mesh = load(&a.mesh.path)?;
    let cart = mio::load_demo_csv(&a.demo)?;
    let goal = a.goal.resolve(&mesh)?;
    let man = MeshManifold::new(&mesh);
    let t0 = Instant::now();
    let demo = project_demonstration(&man, &cart.positions, &cart.velocities, cart.dt, &ProjectionOptions::default())?;
    let params = FitParams {
        beta: a.beta.unwrap_or(a.alpha / 4.0),
        omega: a.omega,
        ..FitParams::new(a.alpha, a.n_basis)
    };
    let model = fit(&man, &demo, &goal, &params)?;
    let fitted = t0.elapsed();
    mio::save_json(&model, &a.out)?;

    // replay one period from the demonstrated start as a sanity check
    let z0 = demo.samples[0].ydot / model.omega;
    let replay = rollout(&man, &model, &demo.samples[0].y, &z0, demo.period(), demo.dt, None)?;
    let rmse = (replay
        .rows
        .iter()
        .zip(&demo.samples)
        .map(|(r, s)| (r.y.position - s.y.position).norm_squared())
        .sum::<f64>()
        / replay.len().max(1) as f64)
        .sqrt();
    println!("samples {} (dropped {})", demo.len(), model.metadata.dropped_samples.len());
    println!("fit residual {:.6e}", model.metadata.fit_residual);
    println!("r {:.6}", model.r);
    println!("omega {:.6}", model.omega);
    println!("rollout rmse {rmse:.6} m");
    eprintln!("fitted in {}", format_duration(fitted.as_secs_f64()));
    Ok(())
}

fn cmd_integrate(a: &IntegrateArgs) -> CmdResult {
    let mesh = load(&a.mesh.path)?;
    let mut model = mio::load_model(&a.model, &mesh)?;
    let man = MeshManifold::new(&mesh);
    if a.start.is_some() || a.goal.is_some() {
        let start = match &a.start {
            Some(p) => p.resolve(&mesh)?,
            None => model.start,
        };
        let goal = match &a.goal {
            Some(p) => p.resolve(&mesh)?,
            None => model.goal,
        };
        model.retarget(&man, &start, &goal)?;
    }
    let schedule = a.centers.as_ref().map(|p| mio::load_schedule(p, &mesh)).transpose()?;
    let z0 = model.initial_z(&man, &model.start, &model.goal)?;
    let t0 = Instant::now();
    let outcome = rollout_partial(&man, &model, &model.start, &z0.vec, a.duration, a.dt, schedule.as_ref())?;
    let wall = t0.elapsed().as_secs_f64();
    let traj = &outcome.trajectory;
    let w = sink(a.out.as_deref())?;
    if a.poses {
        let poses = frames_along(&mesh, traj, a.filter_tau);
        mio::write_pose_csv(traj, &poses, w)?;
    } else {
        mio::write_trajectory_csv(traj, w)?;
    }
    let per_step = if traj.is_empty() { 0.0 } else { wall / traj.len() as f64 };
    eprintln!(
        "{} rows in {} ({} per step, {} solver rebuilds)",
        traj.len(),
        format_duration(wall),
        format_duration(per_step),
        outcome.rebuilds
    );
    match outcome.error {
        Some(e) => Err(Failure::Domain(format!("{e}; {} valid rows written", traj.len()))),
        None => Ok(()),
    }
}

fn cmd_geodesic(mesh_path: &Path, from: &PointSpec, to: &PointSpec, out: Option<&Path>) -> CmdResult {
    let mesh = load(mesh_path)?;
    let (a, b) = (from.resolve(&mesh)?, to.resolve(&mesh)?);
    let man = MeshManifold::new(&mesh);
    let t0 = Instant::now();
    let solver = man.engine().build_solver(a)?;
    let build = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let path = solver.query_path(&b)?;
    let query = t0.elapsed().as_secs_f64();
    mio::write_geodesic_csv(&path, sink(out)?)?;
    let row = BenchRow {
        mesh: mesh_path.display().to_string(),
        n_v: mesh.n_vertices(),
        n_f: mesh.n_faces(),
        delta_const: build,
        delta_query: query,
        builds: 1,
        queries: 1,
    };
    eprint!("{}", format_table(&[row]));
    eprintln!("length {:.9} m, {} points", path.length(), path.points.len());
    Ok(())
}

fn cmd_logmap(mesh_path: &Path, from: &PointSpec, to: &PointSpec) -> CmdResult {
    let mesh = load(mesh_path)?;
    let (a, b) = (from.resolve(&mesh)?, to.resolve(&mesh)?);
    let log = MeshManifold::new(&mesh).log_map(&a, &b)?;
    print_json(&json!({
        "base": point_json(&a),
        "target": point_json(&b),
        "vec": [log.vec.x, log.vec.y, log.vec.z],
        "norm": log.norm(),
    }))
}

fn cmd_expmap(mesh_path: &Path, at: &PointSpec, v: [f64; 3]) -> CmdResult {
    let mesh = load(mesh_path)?;
    let m = at.resolve(&mesh)?;
    let v = mesh.project_to_tangent(&m, &Vec3::from(v))?;
    let end = MeshManifold::new(&mesh).exp_map(&m, &v.vec)?;
    print_json(&json!({
        "base": point_json(&m),
        "vec": [v.vec.x, v.vec.y, v.vec.z],
        "end": point_json(&end),
    }))
}

fn cmd_oracle(cmd: OracleCmd) -> CmdResult {
    let OracleCmd::Shoot {
        surface,
        radius,
        major,
        minor,
        fun,
        domain,
        u0,
        du0,
        length,
        steps,
        out,
    } = cmd;
    let s = match surface {
        SmoothKind::Plane => ParametricSurface::plane(domain),
        SmoothKind::Sphere => ParametricSurface::sphere(radius),
        SmoothKind::Torus => ParametricSurface::torus(major, minor),
        SmoothKind::Graph => ParametricSurface::graph(fun.into(), domain),
    };
    let steps = steps.unwrap_or_else(|| ((1000.0 * length).ceil() as usize).max(1000));
    let curve = shoot_geodesic(&s, &Vec2::from(u0), &Vec2::from(du0), length, steps)?;
    mio::write_curve_csv(&curve, length, sink(out.as_deref())?)?;
    let e = curve.end();
    eprintln!("end ({:.9}, {:.9}, {:.9}), speed drift {:.2e}", e.x, e.y, e.z, curve.speed_drift());
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    let cfg = BenchConfig {
        sources: a.sources,
        queries: a.queries,
        seed: a.seed,
        parallelism: if a.parallel { Parallelism::Parallel } else { Parallelism::Sequential },
    };
    let rows = if a.mesh.is_empty() {
        bench_table(&cfg)?
    } else {
        a.mesh
            .iter()
            .map(|p| bench_mesh(&p.display().to_string(), &load(p)?, &cfg))
            .collect::<Result<Vec<_>, _>>()?
    };
    if a.json {
        let mut out = io::stdout().lock();
        mio::write_json(&rows, &mut out)?;
        writeln!(out).map_err(stdout_error)?;
    } else {
        print!("{}", format_table(&rows));
    }
    Ok(())
}

fn cmd_eval(demo: &Path, trajectory: &Path) -> CmdResult {
    let demo = mio::load_demo_csv(demo)?;
    let traj = mio::load_timed_positions(trajectory)?;
    let r = eval::period_rmse(&demo, &traj).ok_or_else(|| Failure::Domain("trajectory has no rows".into()))?;
    if r.partial {
        warn!(
            "trajectory covers {} of {} demonstration samples, aligned at best shift {}",
            r.samples,
            demo.len(),
            r.shift
        );
    }
    println!("{:.9}", r.rmse);
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { mesh, threshold, format } => cmd_validate(&mesh, threshold, format),
        Command::Surface { kind, out } => cmd_surface(kind, out.as_deref()),
        Command::Demo {
            curve,
            surface,
            center,
            samples,
            period,
            out,
        } => cmd_demo(&curve, surface, center, samples, period, out.as_deref()),
        Command::Train(a) => cmd_train(&a),
        Command::Integrate(a) => cmd_integrate(&a),
        Command::Geodesic { mesh, from, to, out } => cmd_geodesic(&mesh.path, &from, &to, out.as_deref()),
        Command::Logmap { mesh, from, to } => cmd_logmap(&mesh.path, &from, &to),
        Command::Expmap { mesh, at, vec } => cmd_expmap(&mesh.path, &at, vec),
        Command::Oracle { cmd } => cmd_oracle(cmd),
        Command::Bench(a) => cmd_bench(&a),
        Command::Eval { demo, trajectory } => cmd_eval(&demo, &trajectory),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
