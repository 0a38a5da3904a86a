//! Straightening of a face strip: unfold the strip into the plane, run the
//! funnel algorithm, and reroute around vertices where the path could be
//! shortened by passing on the other side.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint, Vec3};

type Vec2 = Vector2<f64>;

const SOURCE_ID: usize = usize::MAX;
const TARGET_ID: usize = usize::MAX - 1;

fn cross2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn tri(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    cross2(&(a - o), &(b - o))
}

fn angle2(a: &Vec2, b: &Vec2) -> f64 {
    cross2(a, b).abs().atan2(a.dot(b))
}

/// A planar layout of a face strip. `coords[i][j]` is the position of local
/// vertex `j` of `faces[i]`.
struct Unfolded {
    faces: Vec<usize>,
    coords: Vec<[Vec2; 3]>,
}

impl Unfolded {
    fn build(mesh: &Mesh, faces: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(faces.len());
        let [a, b, c] = mesh.face_positions(faces[0]);
        let p0 = Vec2::zeros();
        let p1 = Vec2::new((b - a).norm(), 0.0);
        let p2 = place(&p0, &p1, &a, &b, &c, 1.0);
        coords.push([p0, p1, p2]);
        for i in 1..faces.len() {
            let (prev, cur) = (faces[i - 1], faces[i]);
            let pt = mesh.face(prev);
            let ct = mesh.face(cur);
            let shared: Vec<usize> = (0..3).filter(|&j| ct.contains(&pt[j])).collect();
            if shared.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "faces {prev} and {cur} are consecutive in a strip but share no edge"
                )));
            }
            let opp_prev = 3 - shared[0] - shared[1];
            let (ju, jw) = (shared[0], shared[1]);
            let (u, w) = (pt[ju], pt[jw]);
            let pc = coords[i - 1];
            let (u2, w2) = (pc[ju], pc[jw]);
            let side = tri(&u2, &w2, &pc[opp_prev]).signum();
            let lu = mesh.local_index(cur, u).unwrap();
            let lw = mesh.local_index(cur, w).unwrap();
            let lc = 3 - lu - lw;
            let cpos = mesh.face_positions(cur);
            let mut out = [Vec2::zeros(); 3];
            out[lu] = u2;
            out[lw] = w2;
            out[lc] = place(&u2, &w2, &cpos[lu], &cpos[lw], &cpos[lc], -side);
            coords.push(out);
        }
        Ok(Unfolded {
            faces: faces.to_vec(),
            coords,
        })
    }

    fn vertex2(&self, i: usize, v: usize, mesh: &Mesh) -> Vec2 {
        self.coords[i][mesh.local_index(self.faces[i], v).unwrap()]
    }

    /// 2D image of a 3D point lying on face `faces[i]`.
    fn point2(&self, i: usize, p: &Vec3, mesh: &Mesh) -> Vec2 {
        let b = mesh.barycentric(self.faces[i], p);
        let c = &self.coords[i];
        c[0] * b[0] + c[1] * b[1] + c[2] * b[2]
    }
}

/// Places the third vertex of a triangle whose edge `(u, w)` is already
/// laid out, on the side given by `sign` relative to `u2 -> w2`.
fn place(u2: &Vec2, w2: &Vec2, u: &Vec3, w: &Vec3, c: &Vec3, sign: f64) -> Vec2 {
    let uw = w - u;
    let l = uw.norm();
    let d2 = w2 - u2;
    let l2 = d2.norm();
    if l == 0.0 || l2 == 0.0 {
        return *u2;
    }
    let dir = d2 / l2;
    let perp = Vec2::new(-dir.y, dir.x);
    let uc = c - u;
    let x = uc.dot(&uw) / l;
    let h = uc.cross(&uw).norm() / l;
    let sign = if sign == 0.0 { 1.0 } else { sign };
    u2 + dir * x + perp * (h * sign)
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    p: Vec2,
    id: usize,
}

impl PartialEq for Pt {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id && self.p == o.p
    }
}

/// A corner of the funnel path: mesh vertex `v`, first reached at funnel
/// portal `portal` (portal `i >= 1` joins strip faces `i - 1` and `i`).
#[derive(Debug, Clone, Copy)]
struct Corner {
    v: usize,
    portal: usize,
}

/// Where a path point sits on the mesh.
#[derive(Debug, Clone, Copy)]
enum Site {
    Source,
    Target,
    Vertex(usize),
    Edge(usize, usize, f64),
}

struct Funnel {
    /// 2D polyline source, corners, target.
    nodes: Vec<Pt>,
    corners: Vec<Corner>,
    sites: Vec<Site>,
    length: f64,
}

fn funnel(mesh: &Mesh, strip: &Unfolded, src: &Vec3, tgt: &Vec3) -> Funnel {
    let m = strip.faces.len();
    let s2 = strip.point2(0, src, mesh);
    let t2 = strip.point2(m - 1, tgt, mesh);
    let s = Pt { p: s2, id: SOURCE_ID };
    let t = Pt { p: t2, id: TARGET_ID };

    // portals[i] = (left, right) seen when walking from face i - 1 into i
    let mut portals: Vec<(Pt, Pt)> = Vec::with_capacity(m + 1);
    portals.push((s, s));
    for i in 0..m - 1 {
        let (f, g) = (strip.faces[i], strip.faces[i + 1]);
        let ft = mesh.face(f);
        let shared: Vec<usize> = (0..3).filter(|&j| mesh.face(g).contains(&ft[j])).collect();
        let (ja, jb) = (shared[0], shared[1]);
        let a = Pt {
            p: strip.coords[i][ja],
            id: ft[ja],
        };
        let b = Pt {
            p: strip.coords[i][jb],
            id: ft[jb],
        };
        let c = strip.coords[i][3 - ja - jb];
        if tri(&a.p, &b.p, &c) > 0.0 {
            portals.push((b, a));
        } else {
            portals.push((a, b));
        }
    }
    portals.push((t, t));

    let mut nodes = vec![s];
    let mut corners = Vec::new();
    let (mut apex, mut left, mut right) = (s, s, s);
    let (mut left_i, mut right_i) = (0usize, 0usize);
    let mut i = 1;
    let mut guard = 0usize;
    while i < portals.len() {
        guard += 1;
        if guard > 16 * portals.len() * portals.len() + 64 {
            break;
        }
        let (l, r) = portals[i];
        if tri(&apex.p, &right.p, &r.p) >= 0.0 {
            if apex == right || apex == left || r == left || tri(&apex.p, &left.p, &r.p) < 0.0 {
                right = r;
                right_i = i;
            } else {
                nodes.push(left);
                corners.push(Corner {
                    v: left.id,
                    portal: left_i,
                });
                apex = left;
                right = apex;
                right_i = left_i;
                i = left_i + 1;
                continue;
            }
        }
        if tri(&apex.p, &left.p, &l.p) <= 0.0 {
            if apex == left || apex == right || l == right || tri(&apex.p, &right.p, &l.p) > 0.0 {
                left = l;
                left_i = i;
            } else {
                nodes.push(right);
                corners.push(Corner {
                    v: right.id,
                    portal: right_i,
                });
                apex = right;
                left = apex;
                left_i = right_i;
                i = right_i + 1;
                continue;
            }
        }
        i += 1;
    }
    nodes.push(t);

    // crossing point of every strip portal; the segment crossing portal
    // `pi` starts at the last corner reached at or before `pi`
    let c = corners.len();
    let reached = |j: usize| -> usize {
        if j == 0 {
            0
        } else if j <= c {
            corners[j - 1].portal
        } else {
            m
        }
    };
    let mut sites = vec![Site::Source];
    let mut seg = 0usize;
    for (pi, (l, r)) in portals.iter().enumerate().take(m).skip(1) {
        while seg < c && reached(seg + 1) <= pi {
            seg += 1;
        }
        let (p, q) = (nodes[seg], nodes[seg + 1]);
        let (u, w) = (*r, *l);
        if u == p || u == q {
            sites.push(Site::Vertex(u.id));
            continue;
        }
        if w == p || w == q {
            sites.push(Site::Vertex(w.id));
            continue;
        }
        let d = q.p - p.p;
        let e = w.p - u.p;
        let den = cross2(&e, &d);
        let tpar = if den.abs() > 1e-300 {
            cross2(&(p.p - u.p), &d) / den
        } else {
            (p.p - u.p).dot(&e) / e.norm_squared().max(1e-300)
        };
        sites.push(Site::Edge(u.id, w.id, tpar.clamp(0.0, 1.0)));
    }
    sites.push(Site::Target);

    let length = nodes.windows(2).map(|w| (w[1].p - w[0].p).norm()).sum();
    Funnel {
        nodes,
        corners,
        sites,
        length,
    }
}

/// Faces around `v` adjacent through edges `(v, x)`; shortest route from
/// `from` to `to` that crosses no edge `(v, x)` with `x` in `blocked`.
fn fan_route(
    mesh: &Mesh,
    v: usize,
    from: usize,
    to: usize,
    blocked: &HashSet<usize>,
) -> Option<Vec<usize>> {
    if from == to {
        return Some(vec![from]);
    }
    let fan = mesh.vertex_faces(v);
    let idx = |f: usize| fan.iter().position(|&g| g == f);
    let (s, t) = (idx(from)?, idx(to)?);
    let mut prev: Vec<Option<usize>> = vec![None; fan.len()];
    let mut seen = vec![false; fan.len()];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(a) = queue.pop_front() {
        if a == t {
            break;
        }
        let fa = mesh.face(fan[a]);
        for (b, &fb) in fan.iter().enumerate() {
            if seen[b] {
                continue;
            }
            let fbt = mesh.face(fb);
            let through = fa
                .iter()
                .any(|&x| x != v && !blocked.contains(&x) && fbt.contains(&x));
            if through {
                seen[b] = true;
                prev[b] = Some(a);
                queue.push_back(b);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut route = vec![fan[t]];
    let mut c = t;
    while let Some(p) = prev[c] {
        route.push(fan[p]);
        c = p;
    }
    route.reverse();
    Some(route)
}

/// Connects consecutive faces that share only the vertex `v`.
fn connect(mesh: &Mesh, strip: &mut Vec<usize>, next: usize, via_vertex: Option<usize>) {
    let last = *strip.last().unwrap();
    if last == next {
        return;
    }
    let shared = mesh
        .face(last)
        .iter()
        .filter(|v| mesh.face(next).contains(v))
        .count();
    if shared >= 2 {
        strip.push(next);
        return;
    }
    let v = via_vertex.or_else(|| {
        mesh.face(last)
            .iter()
            .copied()
            .find(|v| mesh.face(next).contains(v))
    });
    if let Some(v) = v {
        if let Some(route) = fan_route(mesh, v, last, next, &HashSet::new()) {
            strip.extend_from_slice(&route[1..]);
            return;
        }
    }
    strip.push(next);
}

/// Removes `a b a` detours and repeated faces.
fn simplify(strip: &mut Vec<usize>) {
    let mut out: Vec<usize> = Vec::with_capacity(strip.len());
    for &f in strip.iter() {
        if out.last() == Some(&f) {
            continue;
        }
        if out.len() >= 2 && out[out.len() - 2] == f {
            out.pop();
            continue;
        }
        out.push(f);
    }
    *strip = out;
}

/// Drops leading faces the source can skip and trailing faces the target
/// can skip, so endpoints on a vertex or edge leave through any of their
/// faces.
fn trim_ends(mesh: &Mesh, strip: &mut Vec<usize>, source: &SurfacePoint, target: &SurfacePoint) {
    let src = mesh.incident_faces(source);
    let start = strip.iter().rposition(|f| src.contains(f)).unwrap_or(0);
    strip.drain(..start);
    let tgt = mesh.incident_faces(target);
    if let Some(end) = strip.iter().position(|f| tgt.contains(f)) {
        strip.truncate(end + 1);
    }
}

/// Straightening result.
pub(crate) struct Straightened {
    pub points: Vec<SurfacePoint>,
    pub passes: usize,
}

/// An anchor of the Dijkstra chain: a graph node given by its incident
/// faces, a possible vertex id, and its position.
pub(crate) struct Anchor<'a> {
    pub faces: &'a [usize],
    pub vertex: Option<usize>,
}

/// Builds the face strip visited by a chain `source, anchors..., target`.
pub(crate) fn strip_from_chain(
    mesh: &Mesh,
    src_faces: &[usize],
    anchors: &[Anchor],
    tgt_faces: &[usize],
) -> Vec<usize> {
    let mut sets: Vec<(&[usize], Option<usize>)> = Vec::with_capacity(anchors.len() + 2);
    sets.push((src_faces, None));
    for a in anchors {
        sets.push((a.faces, a.vertex));
    }
    sets.push((tgt_faces, None));
    let mut strip: Vec<usize> = Vec::new();
    for k in 0..sets.len() - 1 {
        let (a, _) = sets[k];
        let (b, _) = sets[k + 1];
        let prev = strip.last().copied();
        // prefer staying in the current face
        let common = match prev {
            Some(p) if a.contains(&p) && b.contains(&p) => Some(p),
            _ => a.iter().copied().filter(|f| b.contains(f)).min(),
        };
        let f = match common {
            Some(f) => f,
            None => *b.iter().min().unwrap(),
        };
        if strip.is_empty() {
            strip.push(f);
        } else {
            connect(mesh, &mut strip, f, sets[k].1);
        }
    }
    // the target may sit on an edge/vertex reached through a different face
    simplify(&mut strip);
    strip
}

fn to_points(mesh: &Mesh, f: &Funnel, source: &SurfacePoint, target: &SurfacePoint) -> Vec<SurfacePoint> {
    let mut out: Vec<SurfacePoint> = Vec::with_capacity(f.sites.len());
    for s in &f.sites {
        let p = match *s {
            Site::Source => *source,
            Site::Target => *target,
            Site::Vertex(v) => mesh.vertex_point(v),
            Site::Edge(u, w, t) => match mesh.edge_point(u, w, t) {
                Some(p) => p,
                None => continue,
            },
        };
        if let Some(last) = out.last() {
            if (last.position - p.position).norm() <= 1e-14 {
                if matches!(s, Site::Target) {
                    out.pop();
                } else {
                    continue;
                }
            }
        }
        out.push(p);
    }
    if out.len() == 1 {
        out.push(*target);
    }
    out
}

/// Shortest path in the strip, then repeated vertex rerouting while some
/// corner admits a shortcut on its other side. Once no corner does, the
/// strip is also flipped around each corner and each cone vertex (angle sum
/// below 2π) it touches, and a flip is kept when its relaxed path is
/// shorter. Flips escape paths pinned at saddle vertices, where both sides
/// can exceed π, and geodesics that pass a cone vertex on the long side.
pub(crate) fn straighten(
    mesh: &Mesh,
    strip: Vec<usize>,
    source: &SurfacePoint,
    target: &SurfacePoint,
    max_passes: usize,
    tolerance: f64,
) -> Result<Straightened> {
    let tol = tolerance.max(1e-14);
    let mut passes = 0usize;
    let (mut unfolded, mut best) = relax(mesh, strip, source, target, &mut passes, max_passes, tol)?;
    let mut flips = 0usize;
    'flips: while flips < max_passes {
        for alt in flip_candidates(mesh, &unfolded, &best) {
            let mut budget = 0usize;
            let (u, cand) = relax(mesh, alt, source, target, &mut budget, max_passes, tol)?;
            if cand.length < best.length - tol {
                unfolded = u;
                best = cand;
                flips += 1;
                passes += budget;
                continue 'flips;
            }
        }
        break;
    }
    Ok(Straightened {
        points: to_points(mesh, &best, source, target),
        passes,
    })
}

/// Strips passing on the other side of each corner and of each interior
/// cone vertex touched by the strip.
fn flip_candidates(mesh: &Mesh, strip: &Unfolded, path: &Funnel) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for k in 0..path.corners.len() {
        if let Some((_, alt)) = flip(mesh, strip, path, k) {
            seen.insert(path.corners[k].v);
            out.push(alt);
        }
    }
    let faces = &strip.faces;
    for i in 0..faces.len() {
        for v in mesh.face(faces[i]) {
            if !seen.insert(v) || mesh.is_boundary_vertex(v) {
                continue;
            }
            let deficit = 2.0 * PI - mesh.vertex_angle_sum(v);
            if deficit <= 1e-9 || !may_enclose(&path.nodes, &strip.vertex2(i, v, mesh), deficit) {
                continue;
            }
            // every maximal run of strip faces around v
            let mut a = 0;
            while a < faces.len() {
                if mesh.local_index(faces[a], v).is_none() {
                    a += 1;
                    continue;
                }
                let mut b = a;
                while b + 1 < faces.len() && mesh.local_index(faces[b + 1], v).is_some() {
                    b += 1;
                }
                if b > a {
                    if let Some(alt) = flip_run(mesh, faces, v, a, b) {
                        out.push(alt);
                    }
                }
                a = b + 1;
            }
        }
    }
    out
}

/// Whether a geodesic on the other side of a cone vertex at `v` can exist.
/// The two sides form a bigon whose corner angles sum to the deficit, so
/// with `v` at distance `d` from the path and `a`, `b` along it,
/// `d (1/a + 1/b) ≈ deficit`. A factor two covers the small-angle error.
fn may_enclose(nodes: &[Pt], v: &Vec2, deficit: f64) -> bool {
    let total: f64 = nodes.windows(2).map(|w| (w[1].p - w[0].p).norm()).sum();
    let mut best = (f64::INFINITY, 0.0);
    let mut run = 0.0;
    for w in nodes.windows(2) {
        let e = w[1].p - w[0].p;
        let l = e.norm();
        let t = if l > 0.0 { ((v - w[0].p).dot(&e) / (l * l)).clamp(0.0, 1.0) } else { 0.0 };
        let d = (w[0].p + e * t - v).norm();
        if d < best.0 {
            best = (d, run + t * l);
        }
        run += l;
    }
    let (d, a) = best;
    let b = total - a;
    d * total <= 2.0 * deficit * a * b + 1e-12 * total * total
}

/// Replaces the run `faces[a..=b]` around `v` by the route around the
/// other side of `v`.
fn flip_run(mesh: &Mesh, faces: &[usize], v: usize, a: usize, b: usize) -> Option<Vec<usize>> {
    let blocked: HashSet<usize> = (a..b)
        .filter_map(|i| {
            mesh.face(faces[i])
                .into_iter()
                .find(|&x| x != v && mesh.face(faces[i + 1]).contains(&x))
        })
        .collect();
    let route = fan_route(mesh, v, faces[a], faces[b], &blocked)?;
    let mut out = faces[..a].to_vec();
    out.extend_from_slice(&route);
    out.extend_from_slice(&faces[b + 1..]);
    Some(out)
}

/// Funnel plus greedy rerouting at corners whose outer angle is below π.
fn relax(
    mesh: &Mesh,
    strip: Vec<usize>,
    source: &SurfacePoint,
    target: &SurfacePoint,
    passes: &mut usize,
    max_passes: usize,
    tol: f64,
) -> Result<(Unfolded, Funnel)> {
    let mut strip = strip;
    simplify(&mut strip);
    trim_ends(mesh, &mut strip, source, target);
    let mut unfolded = Unfolded::build(mesh, &strip)?;
    let mut best = funnel(mesh, &unfolded, &source.position, &target.position);
    *passes += 1;
    while *passes < max_passes {
        let next = (0..best.corners.len())
            .filter_map(|k| flip(mesh, &unfolded, &best, k))
            .find(|(outer, _)| *outer < PI - 1e-9);
        let Some((_, mut cand_strip)) = next else {
            break;
        };
        simplify(&mut cand_strip);
        trim_ends(mesh, &mut cand_strip, source, target);
        if cand_strip.is_empty() {
            break;
        }
        let cand_unfold = Unfolded::build(mesh, &cand_strip)?;
        let cand = funnel(mesh, &cand_unfold, &source.position, &target.position);
        *passes += 1;
        if cand.length < best.length - tol {
            unfolded = cand_unfold;
            best = cand;
        } else {
            break;
        }
    }
    Ok((unfolded, best))
}

/// Outer angle at corner `k` and the strip that passes the corner vertex
/// on its other side. `None` for boundary vertices.
fn flip(mesh: &Mesh, strip: &Unfolded, path: &Funnel, k: usize) -> Option<(f64, Vec<usize>)> {
    let c = path.corners[k];
    let v = c.v;
    if v >= mesh.n_vertices() || mesh.is_boundary_vertex(v) {
        return None;
    }
    let faces = &strip.faces;
    let (mut a, mut b) = (c.portal - 1, c.portal);
    while a > 0 && mesh.local_index(faces[a - 1], v).is_some() {
        a -= 1;
    }
    while b + 1 < faces.len() && mesh.local_index(faces[b + 1], v).is_some() {
        b += 1;
    }
    let v2 = strip.vertex2(a, v, mesh);
    let d_in = path.nodes[k].p - v2;
    let d_out = path.nodes[k + 2].p - v2;
    let other = |i: usize, j: usize| -> Option<usize> {
        mesh.face(faces[i])
            .into_iter()
            .find(|&x| x != v && mesh.face(faces[j]).contains(&x))
    };
    let mut inner = angle2(&d_in, &(strip.vertex2(a, other(a, a + 1)?, mesh) - v2));
    for &f in &faces[a + 1..b] {
        inner += mesh.corner_angle(f, mesh.local_index(f, v)?);
    }
    inner += angle2(&(strip.vertex2(b, other(b, b - 1)?, mesh) - v2), &d_out);
    let outer = mesh.vertex_angle_sum(v) - inner;
    Some((outer, flip_run(mesh, faces, v, a, b)?))
}
