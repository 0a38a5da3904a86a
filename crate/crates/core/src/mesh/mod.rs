//! Triangle meshes treated as discrete 2-manifolds embedded in 3D.
//!
//! A [`Mesh`] is immutable once built. Construction derives the edge
//! adjacency, unit face normals and an AABB hierarchy used for closest-point
//! queries. Points on the surface are addressed by [`SurfacePoint`] (a face
//! plus barycentric weights) and vectors in the tangent plane of a face by
//! [`TangentVector`].

mod bvh;
pub mod io;
mod validate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use bvh::Bvh;
pub use io::{load_mesh, parse_obj, parse_off, write_obj, MeshFormat};
pub use validate::{OrientationViolation, ValidationReport};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Slack allowed on barycentric weights for on-face membership.
pub const BARY_EPS: f64 = 1e-10;

/// Below this relative size a projected vector has no usable direction.
const PROJECTION_EPS: f64 = 1e-12;

/// A location on the mesh: a face, barycentric weights and the cached
/// 3D position they describe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
    #[serde(skip, default = "Vec3::zeros")]
    pub position: Vec3,
}

impl SurfacePoint {
    /// Exact key for hashing and memoization.
    pub fn key(&self) -> (usize, [u64; 3]) {
        (self.face, self.bary.map(f64::to_bits))
    }
}

/// A vector in the tangent plane of the face containing `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SurfacePoint,
    pub vec: Vec3,
}

impl TangentVector {
    pub fn zero(base: SurfacePoint) -> Self {
        TangentVector {
            base,
            vec: Vec3::zeros(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }
}

/// Per-face data needed to go from positions/directions to barycentric
/// coordinates.
#[derive(Debug, Clone, Copy)]
struct FaceFrame {
    e1: Vec3,
    e2: Vec3,
    // inverse of the Gram matrix of (e1, e2)
    inv_gram: [[f64; 2]; 2],
    degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<Vec<usize>>,
    edge_lookup: HashMap<(usize, usize), usize>,
    // face_edges[f][i] is the edge (faces[f][i], faces[f][(i + 1) % 3])
    face_edges: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    normals: Vec<Vec3>,
    frames: Vec<FaceFrame>,
    bvh: Bvh,
    mean_edge: f64,
    min_edge: f64,
}

impl Mesh {
    /// Builds a mesh from raw vertex and face lists. Winding is taken as
    /// given; normals follow the right-hand rule on `(v0, v1, v2)`.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (f, tri) in faces.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidFace {
                    face: f,
                    reason: format!("vertex index {bad} out of range"),
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidFace {
                    face: f,
                    reason: "repeated vertex index".into(),
                });
            }
            if let Some(v) = tri.iter().find(|&&v| !vertices[v].iter().all(|c| c.is_finite())) {
                return Err(Error::InvalidFace {
                    face: f,
                    reason: format!("vertex {v} has non-finite coordinates"),
                });
            }
        }

        let mut edges = Vec::new();
        let mut edge_faces: Vec<Vec<usize>> = Vec::new();
        let mut edge_lookup = HashMap::with_capacity(faces.len() * 3 / 2 + 3);
        let mut face_edges = Vec::with_capacity(faces.len());
        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (f, tri) in faces.iter().enumerate() {
            let mut fe = [0usize; 3];
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                edge_faces[e].push(f);
                fe[i] = e;
                vertex_faces[tri[i]].push(f);
            }
            face_edges.push(fe);
        }

        let mut normals = Vec::with_capacity(faces.len());
        let mut frames = Vec::with_capacity(faces.len());
        for tri in &faces {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let e1 = b - a;
            let e2 = c - a;
            let cross = e1.cross(&e2);
            let g11 = e1.dot(&e1);
            let g12 = e1.dot(&e2);
            let g22 = e2.dot(&e2);
            let det = g11 * g22 - g12 * g12;
            let degenerate = !(det > 1e-24 * (g11 * g22).max(f64::MIN_POSITIVE));
            if degenerate {
                normals.push(Vec3::zeros());
                frames.push(FaceFrame {
                    e1,
                    e2,
                    inv_gram: [[0.0; 2]; 2],
                    degenerate,
                });
            } else {
                normals.push(cross.normalize());
                frames.push(FaceFrame {
                    e1,
                    e2,
                    inv_gram: [[g22 / det, -g12 / det], [-g12 / det, g11 / det]],
                    degenerate,
                });
            }
        }

        let (sum, min) = edges.iter().fold((0.0, f64::INFINITY), |(s, m), &[a, b]| {
            let l = (vertices[a] - vertices[b]).norm();
            (s + l, m.min(l))
        });
        let mean_edge = sum / edges.len() as f64;

        let bvh = Bvh::build(&vertices, &faces);

        Ok(Mesh {
            vertices,
            faces,
            edges,
            edge_faces,
            edge_lookup,
            face_edges,
            vertex_faces,
            normals,
            frames,
            bvh,
            mean_edge,
            min_edge: min,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|v| self.vertices[v])
    }

    /// Unit normal of face `f` (zero for degenerate faces).
    pub fn normal(&self, f: usize) -> Vec3 {
        self.normals[f]
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn is_degenerate(&self, f: usize) -> bool {
        self.frames[f].degenerate
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Faces incident to edge `e`. More than two means the edge is
    /// non-manifold.
    pub fn edge_faces(&self, e: usize) -> &[usize] {
        &self.edge_faces[e]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    /// Edge ids of face `f`; entry `i` joins local vertices `i` and `i+1`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    /// The face across local edge `i` of face `f`, if any.
    pub fn neighbor(&self, f: usize, i: usize) -> Option<usize> {
        self.edge_faces[self.face_edges[f][i]]
            .iter()
            .copied()
            .find(|&g| g != f)
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge
    }

    pub fn min_edge_length(&self) -> f64 {
        self.min_edge
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Length of the bounding-box diagonal.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.bvh.bounds();
        (hi - lo).norm()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e].len() < 2
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_faces[v].iter().any(|&f| {
            self.face_edges[f]
                .iter()
                .any(|&e| self.edge_faces[e].len() != 2 && self.edges[e].contains(&v))
        })
    }

    /// Interior angle of face `f` at its local vertex `i`.
    pub fn corner_angle(&self, f: usize, i: usize) -> f64 {
        let p = self.face_positions(f);
        let a = p[(i + 1) % 3] - p[i];
        let b = p[(i + 2) % 3] - p[i];
        angle_between(&a, &b)
    }

    /// Sum of the corner angles around vertex `v`.
    pub fn vertex_angle_sum(&self, v: usize) -> f64 {
        self.vertex_faces[v]
            .iter()
            .map(|&f| {
                let i = self.local_index(f, v).expect("vertex_faces is consistent");
                self.corner_angle(f, i)
            })
            .sum()
    }

    /// Position of vertex `v` within face `f` (0, 1 or 2).
    pub fn local_index(&self, f: usize, v: usize) -> Option<usize> {
        self.faces[f].iter().position(|&x| x == v)
    }

    /// Faces whose closure contains `p`: the vertex fan when `p` sits on a
    /// vertex, both sides when it sits on an edge, else its own face.
    pub fn incident_faces(&self, p: &SurfacePoint) -> Vec<usize> {
        let zeros: Vec<usize> = (0..3).filter(|&i| p.bary[i] <= BARY_EPS).collect();
        let tri = self.faces[p.face];
        match zeros.len() {
            2 => {
                let i = (0..3).find(|i| !zeros.contains(i)).unwrap_or(0);
                self.vertex_faces[tri[i]].clone()
            }
            1 => {
                let i = zeros[0];
                let e = self.face_edges[p.face][(i + 1) % 3];
                self.edge_faces[e].clone()
            }
            _ => vec![p.face],
        }
    }

    /// Vertex `v` as a point of its lowest-id incident face.
    pub fn vertex_point(&self, v: usize) -> SurfacePoint {
        let f = *self.vertex_faces[v]
            .iter()
            .min()
            .expect("every vertex used by a face");
        let mut bary = [0.0; 3];
        bary[self.local_index(f, v).unwrap_or(0)] = 1.0;
        self.point(f, bary)
    }

    /// The point `(1 - t) a + t b` on edge `(a, b)`, placed on the edge's
    /// lowest-id face. Endpoints collapse to [`Mesh::vertex_point`].
    pub fn edge_point(&self, a: usize, b: usize, t: f64) -> Option<SurfacePoint> {
        if t <= 0.0 {
            return Some(self.vertex_point(a));
        }
        if t >= 1.0 {
            return Some(self.vertex_point(b));
        }
        let e = self.find_edge(a, b)?;
        let f = *self.edge_faces[e].iter().min()?;
        let mut bary = [0.0; 3];
        bary[self.local_index(f, a)?] = 1.0 - t;
        bary[self.local_index(f, b)?] = t;
        Some(self.point(f, bary))
    }

    /// Builds a point from a face and barycentric weights.
    pub fn point(&self, face: usize, bary: [f64; 3]) -> SurfacePoint {
        let p = self.face_positions(face);
        SurfacePoint {
            face,
            bary,
            position: p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2],
        }
    }

    /// Checked variant of [`Mesh::point`]; rejects weights that do not sum
    /// to one or fall outside the face.
    pub fn surface_point(&self, face: usize, bary: [f64; 3]) -> Result<SurfacePoint> {
        if face >= self.faces.len() {
            return Err(Error::InvalidSurfacePoint(format!(
                "face {face} out of range"
            )));
        }
        let sum: f64 = bary.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSurfacePoint(format!(
                "barycentric weights sum to {sum}"
            )));
        }
        if bary
            .iter()
            .any(|&b| !(-BARY_EPS..=1.0 + BARY_EPS).contains(&b))
        {
            return Err(Error::InvalidSurfacePoint(format!(
                "barycentric weights {bary:?} outside the face"
            )));
        }
        Ok(self.point(face, bary))
    }

    /// Checks the barycentric and position invariants of `p`.
    pub fn check_point(&self, p: &SurfacePoint) -> Result<()> {
        let q = self.surface_point(p.face, p.bary)?;
        let err = (q.position - p.position).norm();
        if err > 1e-9 {
            return Err(Error::InvalidSurfacePoint(format!(
                "cached position is {err:.3e} m from the barycentric position"
            )));
        }
        Ok(())
    }

    /// Barycentric coordinates of the orthogonal projection of `p` onto the
    /// plane of face `f`.
    pub fn barycentric(&self, f: usize, p: &Vec3) -> [f64; 3] {
        let a = self.vertices[self.faces[f][0]];
        let [u, v] = self.plane_coords(f, &(p - a));
        [1.0 - u - v, u, v]
    }

    /// Rate of change of the barycentric weights when moving along `d`
    /// inside face `f`.
    pub(crate) fn bary_direction(&self, f: usize, d: &Vec3) -> [f64; 3] {
        let [u, v] = self.plane_coords(f, d);
        [-u - v, u, v]
    }

    fn plane_coords(&self, f: usize, d: &Vec3) -> [f64; 2] {
        let fr = &self.frames[f];
        let r1 = d.dot(&fr.e1);
        let r2 = d.dot(&fr.e2);
        [
            fr.inv_gram[0][0] * r1 + fr.inv_gram[0][1] * r2,
            fr.inv_gram[1][0] * r1 + fr.inv_gram[1][1] * r2,
        ]
    }

    /// Point of face `f` whose barycentric weights are the clamped and
    /// renormalised projection of `p`.
    pub fn locate_in_face(&self, f: usize, p: &Vec3) -> SurfacePoint {
        let b = self.barycentric(f, p);
        self.point(f, clamp_bary(b))
    }

    /// Closest point on the mesh to `p`; ties go to the lowest face id.
    pub fn closest_point(&self, p: &Vec3) -> SurfacePoint {
        let (face, bary) = self.bvh.closest(&self.vertices, &self.faces, p);
        self.point(face, bary)
    }

    /// Exhaustive per-face closest point scan.
    pub fn closest_point_brute_force(&self, p: &Vec3) -> SurfacePoint {
        let mut best = (f64::INFINITY, 0usize, [1.0, 0.0, 0.0]);
        for (f, tri) in self.faces.iter().enumerate() {
            let [a, b, c] = tri.map(|v| self.vertices[v]);
            let (q, bary) = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.0 - bvh::TIE_TOLERANCE {
                best = (d, f, bary);
            }
        }
        self.point(best.1, best.2)
    }

    /// The edge vectors `(V1 - V0, V2 - V0)` of the face containing `m`.
    pub fn tangent_basis(&self, m: &SurfacePoint) -> Result<(Vec3, Vec3)> {
        if self.frames[m.face].degenerate {
            return Err(Error::DegenerateFace(m.face));
        }
        let fr = &self.frames[m.face];
        Ok((fr.e1, fr.e2))
    }

    /// Norm-preserving projection of `v` onto the tangent plane at `m`.
    pub fn project_to_tangent(&self, m: &SurfacePoint, v: &Vec3) -> Result<TangentVector> {
        Ok(TangentVector {
            base: *m,
            vec: project_norm_preserving(&self.normals[m.face], v)?,
        })
    }
}

/// `(I - n nᵀ) v` rescaled to `‖v‖`. Zero maps to zero.
pub fn project_norm_preserving(n: &Vec3, v: &Vec3) -> Result<Vec3> {
    let len = v.norm();
    if len == 0.0 {
        return Ok(Vec3::zeros());
    }
    let planar = v - n * n.dot(v);
    let plen = planar.norm();
    if plen <= PROJECTION_EPS * len {
        return Err(Error::UndefinedDirection);
    }
    Ok(planar * (len / plen))
}

/// Plain orthogonal projection onto the plane with unit normal `n`.
pub fn project_plane(n: &Vec3, v: &Vec3) -> Vec3 {
    v - n * n.dot(v)
}

pub(crate) fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Clamps tiny negative weights produced by round-off and renormalises.
pub(crate) fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = b.map(|x| x.max(0.0));
    let s: f64 = c.iter().sum();
    if s > 0.0 {
        c.map(|x| x / s)
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Closest point to `p` on triangle `abc`, with its barycentric weights.
pub(crate) fn closest_point_on_triangle(
    p: &Vec3,
    a: &Vec3,
    b: &Vec3,
    c: &Vec3,
) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single() -> Mesh {
        Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::InvalidFace { .. })
        ));
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 1]]),
            Err(Error::InvalidFace { .. })
        ));
        assert!(matches!(Mesh::new(v, vec![]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn tangent_basis_of_unit_triangle() {
        let m = single();
        let p = m.point(0, [1.0 / 3.0; 3]);
        let (e1, e2) = m.tangent_basis(&p).unwrap();
        assert_eq!(e1, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(e2, Vec3::new(0.0, 1.0, 0.0));
        assert_relative_eq!(e1.cross(&e2).normalize(), m.normal(0));
    }

    #[test]
    fn degenerate_face_has_no_basis() {
        let m = Mesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let p = m.point(0, [1.0, 0.0, 0.0]);
        assert!(matches!(m.tangent_basis(&p), Err(Error::DegenerateFace(0))));
    }

    #[test]
    fn projection_keeps_norm() {
        let m = single();
        let p = m.point(0, [1.0 / 3.0; 3]);
        let t = m.project_to_tangent(&p, &Vec3::new(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(t.vec, Vec3::new(2f64.sqrt(), 0.0, 0.0), epsilon = 1e-15);
        let inplane = Vec3::new(0.3, -0.2, 0.0);
        assert_eq!(m.project_to_tangent(&p, &inplane).unwrap().vec, inplane);
        assert_eq!(m.project_to_tangent(&p, &Vec3::zeros()).unwrap().vec, Vec3::zeros());
        assert!(matches!(
            m.project_to_tangent(&p, &Vec3::new(0.0, 0.0, 2.0)),
            Err(Error::UndefinedDirection)
        ));
    }

    #[test]
    fn closest_point_to_offset_centroid() {
        let m = single();
        let c = Vec3::new(1.0 / 3.0, 1.0 / 3.0, 0.1);
        let p = m.closest_point(&c);
        for b in p.bary {
            assert!((b - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn closest_point_at_vertex() {
        let m = single();
        let p = m.closest_point(&Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(p.bary, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn surface_point_checks() {
        let m = single();
        assert!(m.surface_point(0, [0.5, 0.5, 0.0]).is_ok());
        assert!(m.surface_point(0, [0.5, 0.6, -0.1]).is_err());
        assert!(m.surface_point(0, [0.5, 0.6, 0.0]).is_err());
        assert!(m.surface_point(1, [1.0, 0.0, 0.0]).is_err());
    }
}
