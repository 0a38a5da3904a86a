//! Locally shortest on-surface paths.
//!
//! A global route is found by Dijkstra over an edge-subdivision graph and
//! then straightened: the faces it visits are unfolded into the plane, the
//! funnel algorithm yields the shortest path inside that strip, and the
//! strip is rerouted around any vertex where the path could be shortened
//! on the other side. Results are polylines of [`SurfacePoint`]s.
//!
//! [`GeodesicSolver`] fixes a source and answers many target queries.
//! [`GeodesicEngine`] shares the graph between solvers, memoizes them per
//! source and answers one-off point-to-point queries with A*.

mod steiner;
mod strip;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint, Vec3};
use steiner::{DistanceField, SteinerGraph};
use strip::Anchor;

/// Polyline `p_1 .. p_n` on the mesh. A single point is the degenerate path
/// from a point to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub points: Vec<SurfacePoint>,
    pub segment_lengths: Vec<f64>,
}

impl GeodesicPath {
    pub fn from_points(points: Vec<SurfacePoint>) -> Self {
        let segment_lengths = points
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .collect();
        GeodesicPath {
            points,
            segment_lengths,
        }
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths.iter().sum()
    }

    pub fn source(&self) -> &SurfacePoint {
        &self.points[0]
    }

    pub fn target(&self) -> &SurfacePoint {
        self.points.last().expect("paths are never empty")
    }

    pub fn is_degenerate(&self) -> bool {
        self.points.len() == 1
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        let mut segment_lengths = self.segment_lengths.clone();
        segment_lengths.reverse();
        GeodesicPath {
            points,
            segment_lengths,
        }
    }

    /// Direction of the first segment of non-zero length.
    pub fn initial_direction(&self) -> Option<Vec3> {
        self.points
            .windows(2)
            .map(|w| w[1].position - w[0].position)
            .find(|d| d.norm() > 0.0)
    }

    /// Direction of the last segment of non-zero length, pointing forward.
    pub fn final_direction(&self) -> Option<Vec3> {
        self.points
            .windows(2)
            .rev()
            .map(|w| w[1].position - w[0].position)
            .find(|d| d.norm() > 0.0)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.position).collect()
    }
}

/// Sum of the segment lengths.
pub fn path_length(path: &GeodesicPath) -> f64 {
    path.length()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicOptions {
    /// Subdivision points per edge in the routing graph.
    pub steiner_points: usize,
    /// Cap on straighten/reroute rounds.
    pub max_passes: usize,
    /// Minimum length gain for a reroute to be kept (m).
    pub tolerance: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            steiner_points: 4,
            max_passes: 100,
            tolerance: 1e-10,
        }
    }
}

fn same_point(a: &SurfacePoint, b: &SurfacePoint) -> bool {
    a.key() == b.key() || (a.position - b.position).norm() == 0.0
}

fn shared_face(mesh: &Mesh, a: &SurfacePoint, b: &SurfacePoint) -> bool {
    let fa = mesh.incident_faces(a);
    mesh.incident_faces(b).iter().any(|f| fa.contains(f))
}

fn trivial_path(mesh: &Mesh, source: &SurfacePoint, target: &SurfacePoint) -> Option<GeodesicPath> {
    if same_point(source, target) {
        return Some(GeodesicPath::from_points(vec![*source]));
    }
    if shared_face(mesh, source, target) {
        return Some(GeodesicPath::from_points(vec![*source, *target]));
    }
    None
}

fn straighten_chain(
    mesh: &Mesh,
    graph: &SteinerGraph,
    opts: &GeodesicOptions,
    source: &SurfacePoint,
    chain: &[usize],
    target: &SurfacePoint,
) -> Result<GeodesicPath> {
    let src_faces = mesh.incident_faces(source);
    let tgt_faces = mesh.incident_faces(target);
    let anchors: Vec<Anchor> = chain
        .iter()
        .map(|&n| Anchor {
            faces: graph.node_faces(mesh, n),
            vertex: (n < mesh.n_vertices()).then_some(n),
        })
        .collect();
    let faces = strip::strip_from_chain(mesh, &src_faces, &anchors, &tgt_faces);
    let s = strip::straighten(mesh, faces, source, target, opts.max_passes, opts.tolerance)?;
    log::trace!("straightened in {} passes", s.passes);
    Ok(GeodesicPath::from_points(s.points))
}

/// Distance field from a fixed source; answers target queries.
#[derive(Debug, Clone)]
pub struct GeodesicSolver<'m> {
    mesh: &'m Mesh,
    graph: Arc<SteinerGraph>,
    opts: GeodesicOptions,
    source: SurfacePoint,
    field: DistanceField,
    build_time: Duration,
}

/// Builds a solver with default options and a private routing graph.
pub fn build_solver(mesh: &Mesh, source: SurfacePoint) -> Result<GeodesicSolver<'_>> {
    let opts = GeodesicOptions::default();
    let graph = Arc::new(SteinerGraph::new(mesh, opts.steiner_points));
    GeodesicSolver::build(mesh, graph, opts, source)
}

/// Convenience wrapper over [`GeodesicSolver::query_path`].
pub fn query_path(solver: &GeodesicSolver<'_>, target: &SurfacePoint) -> Result<GeodesicPath> {
    solver.query_path(target)
}

impl<'m> GeodesicSolver<'m> {
    fn build(
        mesh: &'m Mesh,
        graph: Arc<SteinerGraph>,
        opts: GeodesicOptions,
        source: SurfacePoint,
    ) -> Result<Self> {
        mesh.check_point(&source)?;
        let start = Instant::now();
        let seeds = graph.attach(mesh, &source);
        let field = steiner::dijkstra(&graph, mesh, &seeds);
        let build_time = start.elapsed();
        Ok(GeodesicSolver {
            mesh,
            graph,
            opts,
            source,
            field,
            build_time,
        })
    }

    pub fn source(&self) -> &SurfacePoint {
        &self.source
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    /// Wall time spent building the distance field.
    pub fn build_time(&self) -> Duration {
        self.build_time
    }

    /// Graph distance to `target`, an upper bound on the path length.
    pub fn graph_distance(&self, target: &SurfacePoint) -> f64 {
        let seeds = self.graph.attach(self.mesh, target);
        self.field.resolve(&seeds).map_or(f64::INFINITY, |x| x.1)
    }

    pub fn query_path(&self, target: &SurfacePoint) -> Result<GeodesicPath> {
        self.mesh.check_point(target)?;
        if let Some(p) = trivial_path(self.mesh, &self.source, target) {
            return Ok(p);
        }
        let seeds = self.graph.attach(self.mesh, target);
        let (end, _) = self.field.resolve(&seeds).ok_or(Error::Unreachable)?;
        let chain = self.field.chain(end);
        straighten_chain(self.mesh, &self.graph, &self.opts, &self.source, &chain, target)
    }
}

/// Shared routing graph, per-source solver cache and point-to-point
/// queries for one mesh.
#[derive(Debug)]
pub struct GeodesicEngine<'m> {
    mesh: &'m Mesh,
    graph: Arc<SteinerGraph>,
    opts: GeodesicOptions,
    cache: Mutex<HashMap<(usize, [u64; 3]), Arc<GeodesicSolver<'m>>>>,
}

impl<'m> GeodesicEngine<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        Self::with_options(mesh, GeodesicOptions::default())
    }

    pub fn with_options(mesh: &'m Mesh, opts: GeodesicOptions) -> Self {
        GeodesicEngine {
            mesh,
            graph: Arc::new(SteinerGraph::new(mesh, opts.steiner_points.max(1))),
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn options(&self) -> &GeodesicOptions {
        &self.opts
    }

    /// Builds a fresh solver, bypassing the cache.
    pub fn build_solver(&self, source: SurfacePoint) -> Result<GeodesicSolver<'m>> {
        GeodesicSolver::build(self.mesh, self.graph.clone(), self.opts, source)
    }

    /// Cached solver for `source`.
    pub fn solver(&self, source: &SurfacePoint) -> Result<Arc<GeodesicSolver<'m>>> {
        let key = source.key();
        if let Some(s) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.build_solver(*source)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, s.clone());
        Ok(s)
    }

    pub fn cached_solvers(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    /// One-off path from `a` to `b` without building a full field.
    pub fn shortest_path(&self, a: &SurfacePoint, b: &SurfacePoint) -> Result<GeodesicPath> {
        self.mesh.check_point(a)?;
        self.mesh.check_point(b)?;
        if let Some(p) = trivial_path(self.mesh, a, b) {
            return Ok(p);
        }
        let seeds = self.graph.attach(self.mesh, a);
        let exits = self.graph.attach(self.mesh, b);
        let (chain, _) = steiner::astar(&self.graph, self.mesh, &seeds, &exits, &b.position)
            .ok_or(Error::Unreachable)?;
        straighten_chain(self.mesh, &self.graph, &self.opts, a, &chain, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{generate_graph_mesh, generate_preset_mesh, GraphFn, Preset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(m: &Mesh, rng: &mut impl Rng) -> SurfacePoint {
        let f = rng.random_range(0..m.n_faces());
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        m.point(f, [1.0 - a - b, a, b])
    }

    #[test]
    fn single_triangle() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (2, 2)).unwrap();
        let s = build_solver(&m, m.point(0, [0.5, 0.25, 0.25])).unwrap();
        let p = s.query_path(&m.point(0, [0.1, 0.1, 0.8])).unwrap();
        assert_eq!(p.points.len(), 2);
        let d = s.query_path(s.source()).unwrap();
        assert!(d.is_degenerate() && d.length() == 0.0);
    }

    #[test]
    fn flat_grid_is_exact() {
        let m = generate_graph_mesh(GraphFn::Zero, [-1.0, 1.0, -1.0, 1.0], (11, 11)).unwrap();
        let engine = GeodesicEngine::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_point(&m, &mut rng);
            let b = random_point(&m, &mut rng);
            let straight = (b.position - a.position).norm();
            let p = engine.shortest_path(&a, &b).unwrap();
            assert!(
                (p.length() - straight).abs() <= 1e-6 * straight.max(1e-12),
                "{} vs {straight}",
                p.length()
            );
            let dir = (b.position - a.position) / straight.max(1e-300);
            for q in &p.points {
                let off = (q.position - a.position) - dir * dir.dot(&(q.position - a.position));
                assert!(off.norm() < 1e-9);
            }
            let s = engine.build_solver(a).unwrap();
            let q = s.query_path(&b).unwrap();
            assert!((q.length() - p.length()).abs() < 1e-9);
        }
    }

    #[test]
    fn icosphere_matches_great_circle() {
        let m = generate_preset_mesh(Preset::Icosphere {
            radius: 1.0,
            subdivisions: 3,
        })
        .unwrap();
        let engine = GeodesicEngine::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_point(&m, &mut rng);
            let b = random_point(&m, &mut rng);
            let exact = a.position.normalize().dot(&b.position.normalize()).clamp(-1.0, 1.0).acos();
            if !(0.3..=2.8).contains(&exact) {
                continue;
            }
            let p = engine.shortest_path(&a, &b).unwrap();
            assert!((p.length() - exact).abs() < 0.02 * exact, "{} vs {exact}", p.length());
        }
    }

    #[test]
    fn symmetric_and_triangle_inequality() {
        let m = generate_graph_mesh(GraphFn::Bumps, [-2.0, 2.0, -2.0, 2.0], (15, 15)).unwrap();
        let engine = GeodesicEngine::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_point(&m, &mut rng);
            let b = random_point(&m, &mut rng);
            let c = random_point(&m, &mut rng);
            let ab = engine.shortest_path(&a, &b).unwrap().length();
            let ba = engine.shortest_path(&b, &a).unwrap().length();
            let bc = engine.shortest_path(&b, &c).unwrap().length();
            let ac = engine.shortest_path(&a, &c).unwrap().length();
            assert!((ab - ba).abs() <= 1e-6 * ab.max(1.0), "{ab} vs {ba}");
            assert!(ac <= ab + bc + 1e-6 * 4.0);
        }
    }

    #[test]
    fn rebuild_is_deterministic() {
        let m = generate_graph_mesh(GraphFn::Bumps, [-2.0, 2.0, -2.0, 2.0], (10, 10)).unwrap();
        let s = m.point(3, [0.3, 0.3, 0.4]);
        let t = m.point(140, [0.2, 0.5, 0.3]);
        let l1 = build_solver(&m, s).unwrap().query_path(&t).unwrap().length();
        let l2 = build_solver(&m, s).unwrap().query_path(&t).unwrap().length();
        assert_eq!(l1, l2);
    }

    #[test]
    fn cache_reuses_solvers() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (4, 4)).unwrap();
        let e = GeodesicEngine::new(&m);
        let s = m.point(0, [0.2, 0.3, 0.5]);
        let a = e.solver(&s).unwrap();
        let b = e.solver(&s).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(e.cached_solvers(), 1);
    }

    #[test]
    fn disconnected_components_are_unreachable() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(6.0, 0.0, 0.0),
            Vec3::new(5.0, 1.0, 0.0),
        ];
        let m = Mesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let s = build_solver(&m, m.point(0, [0.4, 0.3, 0.3])).unwrap();
        assert!(matches!(
            s.query_path(&m.point(1, [0.4, 0.3, 0.3])),
            Err(Error::Unreachable)
        ));
    }

    #[test]
    fn path_points_are_valid_and_connected() {
        let m = generate_preset_mesh(Preset::Torus {
            major: 2.0,
            minor: 0.8,
            n_u: 30,
            n_v: 12,
        })
        .unwrap();
        let engine = GeodesicEngine::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_point(&m, &mut rng);
            let b = random_point(&m, &mut rng);
            let p = engine.shortest_path(&a, &b).unwrap();
            for q in &p.points {
                m.check_point(q).unwrap();
            }
            for w in p.points.windows(2) {
                let fa = m.incident_faces(&w[0]);
                assert!(m.incident_faces(&w[1]).iter().any(|f| fa.contains(f)));
            }
            assert_eq!(p.points[0], a);
            assert_eq!(*p.target(), b);
        }
    }
}

