//! Logarithmic map, exponential map and parallel transport on a mesh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{GeodesicEngine, GeodesicOptions, GeodesicPath, GeodesicSolver};
use crate::mesh::{project_norm_preserving, project_plane, Mat3, Mesh, SurfacePoint, TangentVector, Vec3};

/// How the remaining walk vector is carried into the next face when the
/// exponential map crosses an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceTransition {
    /// Rotate about the shared edge, i.e. unfold the two faces into one
    /// plane. The walk is a straight line in the unfolded strip.
    #[default]
    Unfold,
    /// `(I - n nᵀ) v` onto the next face, rescaled to the old norm.
    Projection,
}

/// Rotation taking the tangent plane at `from` onto the one at `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportRotation {
    pub rotation: Mat3,
    pub from: SurfacePoint,
    pub to: SurfacePoint,
}

impl TransportRotation {
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> TransportRotation {
        TransportRotation {
            rotation: self.rotation.transpose(),
            from: self.to,
            to: self.from,
        }
    }
}

/// Full record of an exponential-map walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpWalk {
    /// Start, every edge/vertex crossing, end.
    pub points: Vec<SurfacePoint>,
    /// Unit direction of travel on arrival, in the end face's plane. Zero
    /// when the input vector was zero.
    pub final_direction: Vec3,
    /// Unit direction of travel at the start.
    pub initial_direction: Vec3,
    /// Arc length walked.
    pub length: f64,
}

impl ExpWalk {
    pub fn end(&self) -> SurfacePoint {
        *self.points.last().expect("walk has a start point")
    }

    pub fn to_path(&self) -> GeodesicPath {
        GeodesicPath::from_points(self.points.clone())
    }
}

fn frame(n: &Vec3, w: &Vec3) -> Mat3 {
    Mat3::from_columns(&[*w, n.cross(w), *n])
}

/// Unit vector along `d` inside the plane with normal `n`.
fn in_plane_unit(n: &Vec3, d: &Vec3) -> Option<Vec3> {
    let p = project_plane(n, d);
    let l = p.norm();
    (l > 1e-12 * d.norm()).then(|| p / l)
}

/// Frame-to-frame rotation taking `(w1, n1)` to `(w2, n2)`. Each `w` must
/// be orthogonal to its `n`; lengths do not matter.
pub fn frame_rotation(n1: &Vec3, w1: &Vec3, n2: &Vec3, w2: &Vec3) -> Mat3 {
    frame(&n2.normalize(), &w2.normalize()) * frame(&n1.normalize(), &w1.normalize()).transpose()
}

/// `[z/‖z‖, n × z/‖z‖, n]`.
pub fn local_frame(mesh: &Mesh, y: &SurfacePoint, z: &Vec3) -> Result<Mat3> {
    let norm = z.norm();
    if !(norm > 1e-12) {
        return Err(Error::DegenerateFrame { norm });
    }
    let n = mesh.normal(y.face);
    let w = in_plane_unit(&n, z).ok_or(Error::DegenerateFrame { norm })?;
    Ok(frame(&n, &w))
}

/// Direction of the first segment of `path`, stretched to its length and
/// expressed in the tangent plane at its start.
pub fn log_of_path(mesh: &Mesh, path: &GeodesicPath) -> Result<TangentVector> {
    let base = *path.source();
    let Some(d) = path.initial_direction() else {
        return Ok(TangentVector::zero(base));
    };
    let n = mesh.normal(base.face);
    let dir = project_norm_preserving(&n, &d)?.normalize();
    Ok(TangentVector {
        base,
        vec: dir * path.length(),
    })
}

/// Rotation carrying vectors at the start of `path` to its end. For a
/// single-point path the direction is taken from `v`.
pub fn transport_rotation(mesh: &Mesh, path: &GeodesicPath, v: &Vec3) -> Result<TransportRotation> {
    let (from, to) = (*path.source(), *path.target());
    let n1 = mesh.normal(from.face);
    let n2 = mesh.normal(to.face);
    let (d1, d2) = match (path.initial_direction(), path.final_direction()) {
        (Some(a), Some(b)) => (a, b),
        _ => (*v, *v),
    };
    let rotation = match (in_plane_unit(&n1, &d1), in_plane_unit(&n2, &d2)) {
        (Some(w1), Some(w2)) => frame_rotation(&n1, &w1, &n2, &w2),
        _ if v.norm() == 0.0 => Mat3::identity(),
        _ => return Err(Error::UndefinedDirection),
    };
    Ok(TransportRotation { rotation, from, to })
}

/// Parallel transport of `v` from the start of `path` to its end.
pub fn parallel_transport(mesh: &Mesh, path: &GeodesicPath, v: &TangentVector) -> Result<TangentVector> {
    if v.vec.norm() == 0.0 {
        return Ok(TangentVector::zero(*path.target()));
    }
    let r = transport_rotation(mesh, path, &v.vec)?;
    Ok(TangentVector {
        base: r.to,
        vec: r.apply(&v.vec),
    })
}

/// Transport of `v` along an exponential-map walk.
pub fn transport_along_walk(mesh: &Mesh, walk: &ExpWalk, v: &Vec3) -> Result<TangentVector> {
    let end = walk.end();
    if v.norm() == 0.0 {
        return Ok(TangentVector::zero(end));
    }
    if walk.length == 0.0 {
        return parallel_transport(mesh, &walk.to_path(), &TangentVector { base: end, vec: *v });
    }
    let start = walk.points[0];
    let rot = frame_rotation(
        &mesh.normal(start.face),
        &walk.initial_direction,
        &mesh.normal(end.face),
        &walk.final_direction,
    );
    Ok(TangentVector {
        base: end,
        vec: rot * v,
    })
}

/// Relative size below which a barycentric rate is treated as zero.
const RATE_EPS: f64 = 1e-12;
/// Exit parameters this close to one end the walk inside the face.
const EXIT_EPS: f64 = 1e-12;

/// Runs Algorithm-1 style walking from `m` along `v`.
pub fn exp_walk(mesh: &Mesh, m: &SurfacePoint, v: &Vec3, transition: FaceTransition) -> Result<ExpWalk> {
    mesh.check_point(m)?;
    let total = v.norm();
    let mut points = vec![*m];
    if total == 0.0 {
        return Ok(ExpWalk {
            points,
            final_direction: Vec3::zeros(),
            initial_direction: Vec3::zeros(),
            length: 0.0,
        });
    }
    let mut face = m.face;
    let mut bary = m.bary;
    let mut vec = project_norm_preserving(&mesh.normal(face), v)?;
    let initial_direction = vec / total;
    let cap = (10.0 * total / mesh.min_edge_length().max(1e-300)).min(1e9) as usize + 100;
    let mut walked = 0.0;
    for _ in 0..cap {
        let db = mesh.bary_direction(face, &vec);
        let scale: f64 = db.iter().map(|x| x.abs()).sum();
        let mut t_exit = f64::INFINITY;
        let mut exit = usize::MAX;
        for i in 0..3 {
            if db[i] < -RATE_EPS * scale {
                let t = (bary[i].max(0.0)) / -db[i];
                if t < t_exit {
                    t_exit = t;
                    exit = i;
                }
            }
        }
        let len = vec.norm();
        if t_exit >= 1.0 - EXIT_EPS {
            let b = crate::mesh::clamp_bary([bary[0] + db[0], bary[1] + db[1], bary[2] + db[2]]);
            let end = mesh.point(face, b);
            walked += len;
            points.push(end);
            return Ok(ExpWalk {
                points,
                final_direction: vec / len,
                initial_direction,
                length: walked,
            });
        }
        let mut b = [0.0; 3];
        for i in 0..3 {
            b[i] = bary[i] + t_exit * db[i];
        }
        b[exit] = 0.0;
        walked += t_exit * len;
        let rest = vec * (1.0 - t_exit);
        // a second coordinate reaching zero means the exit is a vertex
        let others: Vec<usize> = (0..3).filter(|&j| j != exit).collect();
        let vanishing: Vec<usize> = others
            .iter()
            .copied()
            .filter(|&j| b[j] <= 1e-12 && db[j] <= 0.0)
            .collect();
        let tri = mesh.face(face);
        if vanishing.is_empty() {
            let (ia, ic) = ((exit + 1) % 3, (exit + 2) % 3);
            let s = b[ia] + b[ic];
            let t = if s > 0.0 { b[ic] / s } else { 0.5 };
            let Some(next) = mesh.neighbor(face, ia) else {
                return Err(Error::GeodesicLeftSurface {
                    face,
                    residual: rest.norm(),
                });
            };
            let (va, vc) = (tri[ia], tri[ic]);
            let new_vec = carry(mesh, face, next, va, vc, &rest, transition)?;
            let mut nb = [0.0; 3];
            nb[mesh.local_index(next, va).unwrap()] = 1.0 - t;
            nb[mesh.local_index(next, vc).unwrap()] = t;
            let p = mesh.point(next, nb);
            points.push(p);
            face = next;
            bary = nb;
            vec = new_vec;
        } else {
            let keep = others
                .iter()
                .copied()
                .find(|j| !vanishing.contains(j))
                .unwrap_or(others[0]);
            let vertex = tri[keep];
            let (next, new_vec) = through_vertex(mesh, face, vertex, &rest)?;
            let mut nb = [0.0; 3];
            nb[mesh.local_index(next, vertex).unwrap()] = 1.0;
            points.push(mesh.point(next, nb));
            face = next;
            bary = nb;
            vec = new_vec;
        }
        if vec.norm() == 0.0 {
            return Ok(ExpWalk {
                points,
                final_direction: initial_direction,
                initial_direction,
                length: walked,
            });
        }
    }
    Err(Error::NonTermination { steps: cap })
}

/// Unit vector in face `f`'s plane, perpendicular to edge `(a, c)` and
/// pointing into the face.
fn inward(mesh: &Mesh, f: usize, a: usize, c: usize) -> Vec3 {
    let tri = mesh.face(f);
    let third = tri.into_iter().find(|&x| x != a && x != c).unwrap();
    let (pa, pc, pt) = (mesh.vertex(a), mesh.vertex(c), mesh.vertex(third));
    let e = (pc - pa).normalize();
    let d = pt - pa;
    (d - e * e.dot(&d)).normalize()
}

fn carry(
    mesh: &Mesh,
    from: usize,
    to: usize,
    a: usize,
    c: usize,
    v: &Vec3,
    transition: FaceTransition,
) -> Result<Vec3> {
    match transition {
        FaceTransition::Projection => project_norm_preserving(&mesh.normal(to), v),
        FaceTransition::Unfold => {
            let e = (mesh.vertex(c) - mesh.vertex(a)).normalize();
            let in_from = inward(mesh, from, a, c);
            let in_to = inward(mesh, to, a, c);
            if !in_from.iter().chain(in_to.iter()).all(|x| x.is_finite()) {
                return project_norm_preserving(&mesh.normal(to), v);
            }
            let out = e * e.dot(v) - in_to * in_from.dot(v);
            // exact isometry up to round-off; renormalise
            let l = out.norm();
            Ok(if l > 0.0 { out * (v.norm() / l) } else { out })
        }
    }
}

/// Picks the face around `vertex` to continue in: the one whose plane keeps
/// most of `v` and whose corner wedge contains the projected direction.
fn through_vertex(mesh: &Mesh, from: usize, vertex: usize, v: &Vec3) -> Result<(usize, Vec3)> {
    let len = v.norm();
    let mut best: Option<(f64, bool, usize, Vec3)> = None;
    for &g in mesh.vertex_faces(vertex) {
        if g == from || mesh.is_degenerate(g) {
            continue;
        }
        let p = project_plane(&mesh.normal(g), v);
        let keep = p.norm() / len;
        let db = mesh.bary_direction(g, &p);
        let j = mesh.local_index(g, vertex).unwrap();
        let scale: f64 = db.iter().map(|x| x.abs()).sum();
        let inside = (0..3).filter(|&i| i != j).all(|i| db[i] >= -RATE_EPS * scale);
        let cand = (keep, inside, g, p);
        let better = match &best {
            None => true,
            Some((bk, bi, bg, _)) => {
                (inside && !bi) || (inside == *bi && (keep > bk + 1e-15 || ((keep - bk).abs() <= 1e-15 && g < *bg)))
            }
        };
        if better {
            best = Some(cand);
        }
    }
    match best {
        Some((_, inside, g, p)) if inside || !mesh.is_boundary_vertex(vertex) => {
            let pl = p.norm();
            if pl <= 1e-12 * len {
                return Err(Error::UndefinedDirection);
            }
            Ok((g, p * (len / pl)))
        }
        _ => Err(Error::GeodesicLeftSurface {
            face: from,
            residual: len,
        }),
    }
}

/// The three operators bundled with a geodesic engine.
#[derive(Debug)]
pub struct MeshManifold<'m> {
    engine: GeodesicEngine<'m>,
    transition: FaceTransition,
}

impl<'m> MeshManifold<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        MeshManifold {
            engine: GeodesicEngine::new(mesh),
            transition: FaceTransition::default(),
        }
    }

    pub fn with_options(mesh: &'m Mesh, opts: GeodesicOptions, transition: FaceTransition) -> Self {
        MeshManifold {
            engine: GeodesicEngine::with_options(mesh, opts),
            transition,
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.engine.mesh()
    }

    pub fn engine(&self) -> &GeodesicEngine<'m> {
        &self.engine
    }

    pub fn transition(&self) -> FaceTransition {
        self.transition
    }

    pub fn geodesic(&self, a: &SurfacePoint, b: &SurfacePoint) -> Result<GeodesicPath> {
        self.engine.shortest_path(a, b)
    }

    /// `Log_{m1}(m2)`.
    pub fn log_map(&self, m1: &SurfacePoint, m2: &SurfacePoint) -> Result<TangentVector> {
        let path = self.engine.shortest_path(m1, m2)?;
        log_of_path(self.mesh(), &path)
    }

    /// `Log_y(s)` where `s` is the source of `solver`.
    pub fn log_to_source(&self, solver: &GeodesicSolver<'_>, y: &SurfacePoint) -> Result<TangentVector> {
        let path = solver.query_path(y)?.reversed();
        log_of_path(self.mesh(), &path)
    }

    pub fn exp_map(&self, m: &SurfacePoint, v: &Vec3) -> Result<SurfacePoint> {
        Ok(self.exp_walk(m, v)?.end())
    }

    pub fn exp_walk(&self, m: &SurfacePoint, v: &Vec3) -> Result<ExpWalk> {
        exp_walk(self.mesh(), m, v, self.transition)
    }

    pub fn parallel_transport(&self, path: &GeodesicPath, v: &TangentVector) -> Result<TangentVector> {
        parallel_transport(self.mesh(), path, v)
    }

    /// Transport of `v` at `a` to `b` along the geodesic between them.
    pub fn transport_between(&self, a: &SurfacePoint, b: &SurfacePoint, v: &Vec3) -> Result<TangentVector> {
        let path = self.engine.shortest_path(a, b)?;
        parallel_transport(self.mesh(), &path, &TangentVector { base: *a, vec: *v })
    }
}

/// `Log_{m1}(m2)` with a one-off geodesic query.
pub fn log_map(mesh: &Mesh, m1: &SurfacePoint, m2: &SurfacePoint) -> Result<TangentVector> {
    MeshManifold::new(mesh).log_map(m1, m2)
}

/// `Exp_m(v)` with the default face transition.
pub fn exp_map(mesh: &Mesh, m: &SurfacePoint, v: &TangentVector) -> Result<SurfacePoint> {
    Ok(exp_walk(mesh, m, &v.vec, FaceTransition::default())?.end())
}
