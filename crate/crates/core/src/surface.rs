//! Synthetic meshes and demonstrations: graph surfaces on uniform grids,
//! torus / icosphere / blob presets and planar curves lifted onto graph
//! surfaces.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

/// Height functions `z = f(x, y)` with analytic gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFn {
    /// The plane `z = 0`.
    Zero,
    /// `e^{-(x-1)^2 y^2} - 0.5 e^{-(x+1)^2 y^2}`.
    Bumps,
    /// Curved sheet with a sharp crest, standing in for a car fender.
    Fender,
}

impl GraphFn {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            GraphFn::Zero => 0.0,
            GraphFn::Bumps => {
                (-(x - 1.0).powi(2) * y * y).exp() - 0.5 * (-(x + 1.0).powi(2) * y * y).exp()
            }
            GraphFn::Fender => {
                let d = y - crest_line(x);
                -0.3 * x * x - 0.8 * y * y - CREST_HEIGHT * (d * d + CREST_ROUND * CREST_ROUND).sqrt()
            }
        }
    }

    /// `(∂f/∂x, ∂f/∂y)`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            GraphFn::Zero => (0.0, 0.0),
            GraphFn::Bumps => {
                let a = (-(x - 1.0).powi(2) * y * y).exp();
                let b = (-(x + 1.0).powi(2) * y * y).exp();
                let fx = -2.0 * (x - 1.0) * y * y * a + (x + 1.0) * y * y * b;
                let fy = -2.0 * (x - 1.0).powi(2) * y * a + (x + 1.0).powi(2) * y * b;
                (fx, fy)
            }
            GraphFn::Fender => {
                let d = y - crest_line(x);
                let s = (d * d + CREST_ROUND * CREST_ROUND).sqrt();
                let dd = -CREST_HEIGHT * d / s;
                (-0.6 * x - dd * crest_slope(x), -1.6 * y + dd)
            }
        }
    }

    /// Second derivatives `(f_xx, f_xy, f_yy)`.
    pub fn hessian(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match self {
            GraphFn::Zero => (0.0, 0.0, 0.0),
            GraphFn::Bumps => {
                let y2 = y * y;
                let a = (-(x - 1.0).powi(2) * y2).exp();
                let b = (-(x + 1.0).powi(2) * y2).exp();
                let (p, q) = (x - 1.0, x + 1.0);
                // d/dx of -2 p y2 a and of q y2 b
                let fxx = a * (-2.0 * y2 + 4.0 * p * p * y2 * y2)
                    - 0.5 * b * (-2.0 * y2 + 4.0 * q * q * y2 * y2);
                let fyy = a * (-2.0 * p * p + 4.0 * p.powi(4) * y2)
                    - 0.5 * b * (-2.0 * q * q + 4.0 * q.powi(4) * y2);
                let fxy = a * (-4.0 * p * y + 4.0 * p.powi(3) * y.powi(3))
                    - 0.5 * b * (-4.0 * q * y + 4.0 * q.powi(3) * y.powi(3));
                (fxx, fxy, fyy)
            }
            GraphFn::Fender => {
                // central differences of the analytic gradient
                let h = 1e-6;
                let (gx1, gy1) = self.gradient(x + h, y);
                let (gx0, gy0) = self.gradient(x - h, y);
                let (_, gy3) = self.gradient(x, y + h);
                let (_, gy2) = self.gradient(x, y - h);
                ((gx1 - gx0) / (2.0 * h), (gy1 - gy0) / (2.0 * h), (gy3 - gy2) / (2.0 * h))
            }
        }
    }

    pub fn lift(&self, x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, self.value(x, y))
    }
}

impl FromStr for GraphFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "flat" | "plane" => Ok(GraphFn::Zero),
            "bumps" => Ok(GraphFn::Bumps),
            "fender" => Ok(GraphFn::Fender),
            other => Err(Error::InvalidInput(format!("unknown surface function {other:?}"))),
        }
    }
}

const CREST_HEIGHT: f64 = 0.04;
const CREST_ROUND: f64 = 0.004;

fn crest_line(x: f64) -> f64 {
    0.03 * (2.0 * x).sin()
}

fn crest_slope(x: f64) -> f64 {
    0.06 * (2.0 * x).cos()
}

/// Samples `fun` on an `nx × ny` vertex grid over `[ax, bx] × [ay, by]` and
/// splits each cell into two counter-clockwise triangles (seen from +z).
pub fn generate_graph_mesh(fun: GraphFn, domain: [f64; 4], grid: (usize, usize)) -> Result<Mesh> {
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("grid {nx}x{ny} is smaller than 2x2")));
    }
    let [ax, bx, ay, by] = domain;
    if !(bx > ax && by > ay) {
        return Err(Error::InvalidInput(format!("empty domain {domain:?}")));
    }
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = ay + (by - ay) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let x = ax + (bx - ax) * i as f64 / (nx - 1) as f64;
            vertices.push(fun.lift(x, y));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces)
}

/// Closed presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Torus {
        major: f64,
        minor: f64,
        n_u: usize,
        n_v: usize,
    },
    Icosphere {
        radius: f64,
        subdivisions: u32,
    },
    /// Genus-0 lumpy closed surface on a latitude/longitude grid, used as a
    /// stand-in for scanned organic shapes. `rings * segments + 2`
    /// vertices, `2 * rings * segments` faces.
    Blob {
        radius: f64,
        rings: usize,
        segments: usize,
    },
}

pub fn generate_preset_mesh(preset: Preset) -> Result<Mesh> {
    match preset {
        Preset::Torus {
            major,
            minor,
            n_u,
            n_v,
        } => torus(major, minor, n_u, n_v),
        Preset::Icosphere {
            radius,
            subdivisions,
        } => icosphere(radius, subdivisions),
        Preset::Blob {
            radius,
            rings,
            segments,
        } => blob(radius, rings, segments),
    }
}

fn torus(major: f64, minor: f64, n_u: usize, n_v: usize) -> Result<Mesh> {
    if n_u < 3 || n_v < 3 || !(major > minor && minor > 0.0) {
        return Err(Error::InvalidInput(format!(
            "torus needs n_u, n_v >= 3 and major > minor > 0 (got {major}, {minor}, {n_u}, {n_v})"
        )));
    }
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let u = TAU * i as f64 / n_u as f64;
        for j in 0..n_v {
            let v = TAU * j as f64 / n_v as f64;
            let rho = major + minor * v.cos();
            vertices.push(Vec3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_u) * n_v + (j % n_v);
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces)
}

fn icosphere(radius: f64, subdivisions: u32) -> Result<Mesh> {
    if !(radius > 0.0) || subdivisions > 8 {
        return Err(Error::InvalidInput(format!(
            "icosphere needs radius > 0 and at most 8 subdivisions (got {radius}, {subdivisions})"
        )));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    Mesh::new(vertices, faces)
}

/// Radial bump profile of the blob preset: a body with two ear-like lobes.
fn blob_radius(theta: f64, phi: f64) -> f64 {
    let lobe = |t0: f64, p0: f64| {
        let dp = (phi - p0 + PI).rem_euclid(TAU) - PI;
        (-((theta - t0).powi(2) + (dp * theta.sin()).powi(2)) / 0.06).exp()
    };
    1.0 + 0.12 * (2.0 * theta).cos() + 0.08 * (3.0 * phi).sin() * theta.sin()
        + 0.35 * lobe(0.45, 0.6)
        + 0.35 * lobe(0.45, -0.6)
}

fn blob(radius: f64, rings: usize, segments: usize) -> Result<Mesh> {
    if rings < 2 || segments < 3 || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "blob needs rings >= 2, segments >= 3, radius > 0 (got {rings}, {segments}, {radius})"
        )));
    }
    let mut vertices = Vec::with_capacity(rings * segments + 2);
    vertices.push(Vec3::new(0.0, 0.0, radius * blob_radius(0.0, 0.0)));
    for i in 0..rings {
        let theta = PI * (i + 1) as f64 / (rings + 1) as f64;
        for j in 0..segments {
            let phi = TAU * j as f64 / segments as f64;
            let r = radius * blob_radius(theta, phi);
            vertices.push(Vec3::new(
                r * theta.sin() * phi.cos(),
                r * theta.sin() * phi.sin(),
                r * theta.cos(),
            ));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -radius * blob_radius(PI, 0.0)));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + i * segments + (j % segments);
    let mut faces = Vec::with_capacity(2 * rings * segments);
    for j in 0..segments {
        faces.push([0, ring(0, j), ring(0, j + 1)]);
    }
    for i in 0..rings - 1 {
        for j in 0..segments {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..segments {
        faces.push([south, ring(rings - 1, j + 1), ring(rings - 1, j)]);
    }
    Mesh::new(vertices, faces)
}

/// The six mesh sizes of the geodesic timing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMesh {
    GeneratedSurface,
    TorusSimple,
    Torus,
    BunnySimple,
    Bunny,
    Fender,
}

impl TableMesh {
    pub const ALL: [TableMesh; 6] = [
        TableMesh::GeneratedSurface,
        TableMesh::TorusSimple,
        TableMesh::Torus,
        TableMesh::BunnySimple,
        TableMesh::Bunny,
        TableMesh::Fender,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TableMesh::GeneratedSurface => "generated surfaces",
            TableMesh::TorusSimple => "torus (simple)",
            TableMesh::Torus => "torus",
            TableMesh::BunnySimple => "bunny-style blob (simple)",
            TableMesh::Bunny => "bunny-style blob",
            TableMesh::Fender => "fender-style sheet",
        }
    }

    pub fn generate(&self) -> Result<Mesh> {
        match self {
            TableMesh::GeneratedSurface => bump_surface_mesh(),
            TableMesh::TorusSimple => generate_preset_mesh(TORUS_SIMPLE),
            TableMesh::Torus => generate_preset_mesh(TORUS_FINE),
            TableMesh::BunnySimple => generate_preset_mesh(Preset::Blob {
                radius: 1.0,
                rings: 40,
                segments: 50,
            }),
            TableMesh::Bunny => generate_preset_mesh(Preset::Blob {
                radius: 1.0,
                rings: 165,
                segments: 211,
            }),
            TableMesh::Fender => fender_mesh(),
        }
    }
}

/// Domain of the bump surface used for the learning benchmark.
pub const BUMP_DOMAIN: [f64; 4] = [-2.0, 2.0, -2.0, 2.0];

/// 1000-vertex torus.
pub const TORUS_SIMPLE: Preset = Preset::Torus {
    major: 2.0,
    minor: 0.8,
    n_u: 50,
    n_v: 20,
};

/// 24 003-vertex torus.
pub const TORUS_FINE: Preset = Preset::Torus {
    major: 2.0,
    minor: 0.8,
    n_u: 189,
    n_v: 127,
};

/// The bump surface on a 28×28 vertex grid (784 vertices, 1458 faces).
pub fn bump_surface_mesh() -> Result<Mesh> {
    generate_graph_mesh(GraphFn::Bumps, BUMP_DOMAIN, (28, 28))
}

/// Fender-style open sheet with a crest, 30 919 vertices.
pub fn fender_mesh() -> Result<Mesh> {
    generate_graph_mesh(GraphFn::Fender, [-0.8, 0.8, -0.175, 0.175], (631, 49))
}

/// Planar curves `η(t)`, one period over `t ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemoCurve {
    Ellipse { a: f64, b: f64 },
    Circle { radius: f64 },
    /// Lemniscate of Gerono `s (cos t, sin t cos t)`, a figure eight.
    Lemniscate { scale: f64 },
}

impl DemoCurve {
    /// Position and derivative with respect to `t`.
    pub fn eval(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (s, c) = t.sin_cos();
        match *self {
            DemoCurve::Ellipse { a, b } => ([a * c, b * s], [-a * s, b * c]),
            DemoCurve::Circle { radius } => ([radius * c, radius * s], [-radius * s, radius * c]),
            DemoCurve::Lemniscate { scale } => (
                [scale * c, scale * s * c],
                [-scale * s, scale * (c * c - s * s)],
            ),
        }
    }
}

/// Cartesian demonstration samples `(χ_k, χ̇_k)` with their period.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianDemo {
    pub dt: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl CartesianDemo {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.dt * self.len() as f64
    }
}

/// Samples `Π ∘ η` uniformly in time over one period, with analytic
/// velocities from the chain rule.
pub fn generate_demo_curve(
    curve: DemoCurve,
    center: [f64; 2],
    surface: GraphFn,
    n_samples: usize,
    period: f64,
) -> Result<CartesianDemo> {
    if n_samples < 16 {
        return Err(Error::InvalidInput(format!(
            "need at least 16 samples, got {n_samples}"
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
    }
    let dt = period / n_samples as f64;
    let omega = TAU / period;
    let mut positions = Vec::with_capacity(n_samples);
    let mut velocities = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = omega * k as f64 * dt;
        let ([x, y], [dx, dy]) = curve.eval(t);
        let (x, y) = (x + center[0], y + center[1]);
        let (dx, dy) = (dx * omega, dy * omega);
        let (fx, fy) = surface.gradient(x, y);
        positions.push(surface.lift(x, y));
        velocities.push(Vec3::new(dx, dy, fx * dx + fy * dy));
    }
    Ok(CartesianDemo {
        dt,
        positions,
        velocities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_volume(m: &Mesh) -> f64 {
        m.faces()
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| m.vertex(v));
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn flat_two_by_two() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (2, 2)).unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (4, 2));
        assert!(m.normals().iter().all(|n| (n - Vec3::z()).norm() < 1e-15));
    }

    #[test]
    fn bump_surface_counts() {
        let m = bump_surface_mesh().unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (784, 1458));
        assert!(m.normals().iter().all(|n| n.z > 0.0));
    }

    #[test]
    fn torus_counts_and_orientation() {
        let m = generate_preset_mesh(Preset::Torus {
            major: 1.0,
            minor: 0.3,
            n_u: 25,
            n_v: 20,
        })
        .unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (500, 1000));
        assert!(signed_volume(&m) > 0.0);
        let simple = generate_preset_mesh(TORUS_SIMPLE).unwrap();
        assert_eq!((simple.n_vertices(), simple.n_faces()), (1000, 2000));
    }

    #[test]
    fn icosphere_counts() {
        for k in 0..=4u32 {
            let m = generate_preset_mesh(Preset::Icosphere {
                radius: 1.0,
                subdivisions: k,
            })
            .unwrap();
            let nf = 20 * 4usize.pow(k);
            assert_eq!(m.n_faces(), nf);
            assert_eq!(m.n_vertices(), nf / 2 + 2);
            assert!(signed_volume(&m) > 0.0);
            let r = m.validate(0.0);
            assert!(r.is_valid() && r.boundary_edges.is_empty());
        }
    }

    #[test]
    fn blob_counts_match_table_sizes() {
        let m = TableMesh::BunnySimple.generate().unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (2002, 4000));
        assert!(signed_volume(&m) > 0.0);
        let r = m.validate(0.0);
        assert!(r.is_valid() && r.boundary_edges.is_empty());
    }

    #[test]
    fn generated_meshes_validate() {
        for m in [
            bump_surface_mesh().unwrap(),
            generate_preset_mesh(TORUS_SIMPLE).unwrap(),
            generate_graph_mesh(GraphFn::Fender, [-0.8, 0.8, -0.175, 0.175], (80, 20)).unwrap(),
        ] {
            assert!(m.validate(0.0).is_valid());
        }
    }

    #[test]
    fn circle_on_plane_has_constant_speed() {
        let d = generate_demo_curve(DemoCurve::Circle { radius: 0.5 }, [0.0, 0.0], GraphFn::Zero, 64, 2.0)
            .unwrap();
        let s = TAU * 0.5 / 2.0;
        for v in &d.velocities {
            assert!((v.norm() - s).abs() < 1e-12);
        }
        assert!(d.positions.iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn velocities_match_central_differences() {
        for curve in [
            DemoCurve::Lemniscate { scale: 1.5 },
            DemoCurve::Ellipse { a: 0.4, b: 0.1 },
        ] {
            let n = 1000;
            let d = generate_demo_curve(curve, [0.1, -0.2], GraphFn::Bumps, n, 5.0).unwrap();
            for k in 0..n {
                let fd = (d.positions[(k + 1) % n] - d.positions[(k + n - 1) % n]) / (2.0 * d.dt);
                let v = d.velocities[k];
                assert!((fd - v).norm() <= 0.01 * v.norm().max(1e-3), "k={k}");
            }
        }
    }

    #[test]
    fn bump_gradient_and_hessian_match_differences() {
        let f = GraphFn::Bumps;
        let h = 1e-5;
        for &(x, y) in &[(0.3, 0.7), (-1.2, 0.4), (1.5, -1.1)] {
            let (gx, gy) = f.gradient(x, y);
            let nx = (f.value(x + h, y) - f.value(x - h, y)) / (2.0 * h);
            let ny = (f.value(x, y + h) - f.value(x, y - h)) / (2.0 * h);
            assert!((gx - nx).abs() < 1e-8 && (gy - ny).abs() < 1e-8);
            let (fxx, fxy, fyy) = f.hessian(x, y);
            let (gx1, gy1) = f.gradient(x + h, y);
            let (gx0, gy0) = f.gradient(x - h, y);
            let (_, gy3) = f.gradient(x, y + h);
            let (_, gy2) = f.gradient(x, y - h);
            assert!((fxx - (gx1 - gx0) / (2.0 * h)).abs() < 1e-7);
            assert!((fxy - (gy1 - gy0) / (2.0 * h)).abs() < 1e-7);
            assert!((fyy - (gy3 - gy2) / (2.0 * h)).abs() < 1e-7);
        }
    }
}
