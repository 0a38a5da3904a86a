//! File formats: trajectory, pose, demonstration, geodesic and curve CSV;
//! model, schedule and report JSON; textual point specifications.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dmp::{CenterSchedule, MeshDmpModel, PoseTrajectory, Trajectory};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicPath;
use crate::mesh::{Mesh, SurfacePoint, Vec3, BARY_EPS};
use crate::oracle::GeodesicCurve;
use crate::surface::CartesianDemo;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io("<json output>", e))?;
    Ok(())
}

pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_json(value, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(open(path.as_ref())?)?)
}

/// Reads a model and recomputes the cached positions of its points.
pub fn load_model(path: impl AsRef<Path>, mesh: &Mesh) -> Result<MeshDmpModel> {
    let mut model: MeshDmpModel = load_json(path)?;
    model.bind(mesh)?;
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TrajectoryRecord {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    face: usize,
    zx: f64,
    zy: f64,
    zz: f64,
    phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PoseRecord {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    face: usize,
    zx: f64,
    zy: f64,
    zz: f64,
    phi: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
}

const TRAJECTORY_HEADER: [&str; 9] = ["t", "x", "y", "z", "face", "zx", "zy", "zz", "phi"];
const POSE_HEADER: [&str; 13] = ["t", "x", "y", "z", "face", "zx", "zy", "zz", "phi", "qw", "qx", "qy", "qz"];

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv_writer(w, &TRAJECTORY_HEADER)?;
    for r in &traj.rows {
        let p = r.y.position;
        out.serialize(TrajectoryRecord {
            t: r.t,
            x: p.x,
            y: p.y,
            z: p.z,
            face: r.y.face,
            zx: r.z.x,
            zy: r.z.y,
            zz: r.z.z,
            phi: r.phi,
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Trajectory columns followed by the filtered orientation.
pub fn write_pose_csv<W: Write>(traj: &Trajectory, poses: &PoseTrajectory, w: W) -> Result<()> {
    if traj.rows.len() != poses.poses.len() {
        return Err(Error::InvalidInput(format!(
            "{} trajectory rows but {} poses",
            traj.rows.len(),
            poses.poses.len()
        )));
    }
    let mut out = csv_writer(w, &POSE_HEADER)?;
    for (r, pose) in traj.rows.iter().zip(&poses.poses) {
        let p = r.y.position;
        let q = pose.orientation.into_inner();
        out.serialize(PoseRecord {
            t: r.t,
            x: p.x,
            y: p.y,
            z: p.z,
            face: r.y.face,
            zx: r.z.x,
            zy: r.z.y,
            zz: r.z.z,
            phi: r.phi,
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// A trajectory read back from CSV: times and positions only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimedPositions {
    pub t: Vec<f64>,
    pub positions: Vec<Vec3>,
}

/// Reads any CSV with `t,x,y,z` as its first columns (trajectory, pose or
/// demonstration files).
pub fn read_timed_positions<R: Read>(r: R) -> Result<TimedPositions> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() < 4 || headers.iter().take(4).ne(["t", "x", "y", "z"]) {
        return Err(Error::parse(1, "expected columns t,x,y,z first"));
    }
    let mut out = TimedPositions::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v = parse_fields(&rec, 4, i + 2)?;
        out.t.push(v[0]);
        out.positions.push(Vec3::new(v[1], v[2], v[3]));
    }
    Ok(out)
}

fn parse_fields(rec: &csv::StringRecord, n: usize, line: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let s = rec.get(k).ok_or_else(|| Error::parse(line, format!("missing column {k}")))?;
            s.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("bad number {s:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct DemoRecord {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

pub fn write_demo_csv<W: Write>(demo: &CartesianDemo, w: W) -> Result<()> {
    let mut out = csv_writer(w, &["t", "x", "y", "z", "vx", "vy", "vz"])?;
    for (k, (p, v)) in demo.positions.iter().zip(&demo.velocities).enumerate() {
        out.serialize(DemoRecord {
            t: k as f64 * demo.dt,
            x: p.x,
            y: p.y,
            z: p.z,
            vx: v.x,
            vy: v.y,
            vz: v.z,
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Reads `t,x,y,z,vx,vy,vz`. Samples must be uniformly spaced in time.
pub fn read_demo_csv<R: Read>(r: R) -> Result<CartesianDemo> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().take(7).ne(["t", "x", "y", "z", "vx", "vy", "vz"]) {
        return Err(Error::parse(1, "expected columns t,x,y,z,vx,vy,vz"));
    }
    let mut t = Vec::new();
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let v = parse_fields(&rec?, 7, i + 2)?;
        t.push(v[0]);
        positions.push(Vec3::new(v[1], v[2], v[3]));
        velocities.push(Vec3::new(v[4], v[5], v[6]));
    }
    if t.len() < 2 {
        return Err(Error::InvalidInput(format!("demonstration has {} samples", t.len())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("demonstration times must increase".into()));
    }
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::parse(k + 3, format!("non-uniform time step {}", w[1] - w[0])));
        }
    }
    Ok(CartesianDemo {
        dt,
        positions,
        velocities,
    })
}

pub fn load_demo_csv(path: impl AsRef<Path>) -> Result<CartesianDemo> {
    read_demo_csv(open(path.as_ref())?)
}

pub fn load_timed_positions(path: impl AsRef<Path>) -> Result<TimedPositions> {
    read_timed_positions(open(path.as_ref())?)
}

/// `x,y,z,face_id`, one row per polyline vertex.
pub fn write_geodesic_csv<W: Write>(path: &GeodesicPath, w: W) -> Result<()> {
    let mut out = csv_writer(w, &["x", "y", "z", "face_id"])?;
    for p in &path.points {
        let q = p.position;
        out.serialize((q.x, q.y, q.z, p.face))?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// `s,u1,u2,x,y,z` for a smooth geodesic, `s` the arc length.
pub fn write_curve_csv<W: Write>(curve: &GeodesicCurve, length: f64, w: W) -> Result<()> {
    let mut out = csv_writer(w, &["s", "u1", "u2", "x", "y", "z"])?;
    let n = curve.points.len().saturating_sub(1).max(1);
    for (k, (u, p)) in curve.params.iter().zip(&curve.points).enumerate() {
        out.serialize((length * k as f64 / n as f64, u.x, u.y, p.x, p.y, p.z))?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))
}

/// A point given on the command line or in a schedule file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    /// Face index and barycentric weights.
    Face { face: usize, bary: [f64; 3] },
    /// Parameters `(x, y)` of a height-field mesh.
    Uv { uv: [f64; 2] },
    /// A 3D position, snapped to the closest mesh point.
    Xyz { xyz: [f64; 3] },
}

impl FromStr for PointSpec {
    type Err = Error;

    /// `u,v`, `face:b0,b1,b2` or `x,y,z`.
    fn from_str(s: &str) -> Result<Self> {
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad number {x:?} in point {s:?}")))
                })
                .collect()
        };
        if let Some((face, bary)) = s.split_once(':') {
            let face = face
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad face index in point {s:?}")))?;
            let b = nums(bary)?;
            return match b.as_slice() {
                [a, b, c] => Ok(PointSpec::Face { face, bary: [*a, *b, *c] }),
                _ => Err(Error::InvalidInput(format!("point {s:?} needs three barycentric weights"))),
            };
        }
        match nums(s)?.as_slice() {
            [u, v] => Ok(PointSpec::Uv { uv: [*u, *v] }),
            [x, y, z] => Ok(PointSpec::Xyz { xyz: [*x, *y, *z] }),
            _ => Err(Error::InvalidInput(format!(
                "point {s:?} must be u,v or face:b0,b1,b2 or x,y,z"
            ))),
        }
    }
}

impl PointSpec {
    pub fn resolve(&self, mesh: &Mesh) -> Result<SurfacePoint> {
        match *self {
            PointSpec::Face { face, bary } => mesh.surface_point(face, bary),
            PointSpec::Xyz { xyz } => Ok(mesh.closest_point(&Vec3::from(xyz))),
            PointSpec::Uv { uv } => locate_above(mesh, uv),
        }
    }
}

/// The mesh point whose `(x, y)` projection is `uv`; the highest one if
/// the mesh folds over itself.
pub fn locate_above(mesh: &Mesh, uv: [f64; 2]) -> Result<SurfacePoint> {
    let mut best: Option<SurfacePoint> = None;
    for f in 0..mesh.n_faces() {
        let [a, b, c] = mesh.face_positions(f);
        let (e1, e2) = ((b - a).xy(), (c - a).xy());
        let det = e1.x * e2.y - e1.y * e2.x;
        if det.abs() < 1e-300 {
            continue;
        }
        let d = nalgebra::Vector2::new(uv[0] - a.x, uv[1] - a.y);
        let l1 = (d.x * e2.y - d.y * e2.x) / det;
        let l2 = (e1.x * d.y - e1.y * d.x) / det;
        let bary = [1.0 - l1 - l2, l1, l2];
        if bary.iter().all(|w| *w >= -BARY_EPS) {
            let bary = bary.map(|w| w.max(0.0));
            let s: f64 = bary.iter().sum();
            let p = mesh.point(f, bary.map(|w| w / s));
            if best.is_none_or(|q| p.position.z > q.position.z) {
                best = Some(p);
            }
        }
    }
    best.ok_or_else(|| Error::InvalidInput(format!("no face above ({}, {})", uv[0], uv[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub t: f64,
    pub point: PointSpec,
}

/// `{"centers": [{"t": 0.0, "point": {...}}, ...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub centers: Vec<ScheduleEntry>,
}

impl ScheduleFile {
    pub fn resolve(&self, mesh: &Mesh) -> Result<CenterSchedule> {
        let entries = self
            .centers
            .iter()
            .map(|e| Ok((e.t, e.point.resolve(mesh)?)))
            .collect::<Result<Vec<_>>>()?;
        CenterSchedule::new(entries)
    }
}

pub fn load_schedule(path: impl AsRef<Path>, mesh: &Mesh) -> Result<CenterSchedule> {
    load_json::<ScheduleFile>(path)?.resolve(mesh)
}

pub fn save_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_trajectory_csv(traj, create(path)?)
}

pub fn save_demo_csv(demo: &CartesianDemo, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_demo_csv(demo, create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmp::TrajectoryRow;
    use crate::surface::{generate_demo_curve, generate_graph_mesh, DemoCurve, GraphFn};

    #[test]
    fn point_spec_forms() {
        assert_eq!("0.5, -1".parse::<PointSpec>().unwrap(), PointSpec::Uv { uv: [0.5, -1.0] });
        assert_eq!(
            "12:0.2,0.3,0.5".parse::<PointSpec>().unwrap(),
            PointSpec::Face { face: 12, bary: [0.2, 0.3, 0.5] }
        );
        assert_eq!("1,2,3".parse::<PointSpec>().unwrap(), PointSpec::Xyz { xyz: [1.0, 2.0, 3.0] });
        assert!("1".parse::<PointSpec>().is_err());
        assert!("x:1,2,3".parse::<PointSpec>().is_err());
        assert!("3:1,2".parse::<PointSpec>().is_err());
    }

    #[test]
    fn uv_lands_on_the_graph() {
        let m = generate_graph_mesh(GraphFn::Bumps, [-2.0, 2.0, -2.0, 2.0], (20, 20)).unwrap();
        let p = PointSpec::Uv { uv: [0.31, -0.7] }.resolve(&m).unwrap();
        assert!((p.position.x - 0.31).abs() < 1e-12 && (p.position.y + 0.7).abs() < 1e-12);
        assert!(PointSpec::Uv { uv: [3.0, 0.0] }.resolve(&m).is_err());
    }

    #[test]
    fn demo_round_trip() {
        let d = generate_demo_curve(DemoCurve::Circle { radius: 0.5 }, [0.0, 0.0], GraphFn::Bumps, 64, 2.0).unwrap();
        let mut buf = Vec::new();
        write_demo_csv(&d, &mut buf).unwrap();
        let back = read_demo_csv(buf.as_slice()).unwrap();
        assert!((back.dt - d.dt).abs() < 1e-15);
        assert_eq!(back.positions, d.positions);
        assert_eq!(back.velocities, d.velocities);
        let tp = read_timed_positions(buf.as_slice()).unwrap();
        assert_eq!(tp.positions, d.positions);
    }

    #[test]
    fn trajectory_header_only_when_empty() {
        let mut buf = Vec::new();
        write_trajectory_csv(&Trajectory { dt: 1e-3, rows: vec![] }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x,y,z,face,zx,zy,zz,phi\n");
    }

    #[test]
    fn trajectory_rows() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (2, 2)).unwrap();
        let traj = Trajectory {
            dt: 0.5,
            rows: vec![TrajectoryRow {
                t: 0.5,
                y: m.point(1, [0.25, 0.25, 0.5]),
                z: Vec3::new(1.0, 0.0, 0.0),
                phi: 0.25,
            }],
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("0.5,"));
        let tp = read_timed_positions(text.as_bytes()).unwrap();
        assert_eq!(tp.positions[0], traj.rows[0].y.position);
    }

    #[test]
    fn schedule_json() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (3, 3)).unwrap();
        let text = r#"{"centers": [
            {"t": 0.0, "point": {"face": 0, "bary": [0.2, 0.3, 0.5]}},
            {"t": 1.0, "point": {"uv": [0.5, 0.5]}},
            {"t": 2.0, "point": {"xyz": [0.9, 0.1, 3.0]}}
        ]}"#;
        let file: ScheduleFile = serde_json::from_str(text).unwrap();
        let s = file.resolve(&m).unwrap();
        assert_eq!(s.entries().len(), 3);
        assert!((s.entries()[2].1.position - Vec3::new(0.9, 0.1, 0.0)).norm() < 1e-12);
    }
}
