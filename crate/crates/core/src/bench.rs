//! Timing harness for geodesic solver construction and path queries.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geodesic::GeodesicEngine;
use crate::mesh::{Mesh, SurfacePoint};
use crate::par::{self, Parallelism};
use crate::surface::TableMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// Solver builds per mesh, one per random source.
    pub sources: usize,
    /// Path queries per built solver.
    pub queries: usize,
    pub seed: u64,
    /// Run independent builds concurrently. Each build is still timed on
    /// its own.
    pub parallelism: Parallelism,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sources: 3,
            queries: 20,
            seed: 7,
            parallelism: Parallelism::Sequential,
        }
    }
}

/// One line of the timing table. Times are means over all builds and all
/// queries, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mesh: String,
    pub n_v: usize,
    pub n_f: usize,
    pub delta_const: f64,
    pub delta_query: f64,
    pub builds: usize,
    pub queries: usize,
}

/// Uniformly random face, uniformly random barycentric weights.
pub fn random_point(mesh: &Mesh, rng: &mut impl Rng) -> SurfacePoint {
    let f = rng.random_range(0..mesh.n_faces());
    let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
    if a + b > 1.0 {
        (a, b) = (1.0 - a, 1.0 - b);
    }
    mesh.point(f, [1.0 - a - b, a, b])
}

pub fn bench_mesh(name: &str, mesh: &Mesh, cfg: &BenchConfig) -> Result<BenchRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jobs: Vec<(SurfacePoint, Vec<SurfacePoint>)> = (0..cfg.sources)
        .map(|_| {
            let s = random_point(mesh, &mut rng);
            let q = (0..cfg.queries).map(|_| random_point(mesh, &mut rng)).collect();
            (s, q)
        })
        .collect();
    let engine = GeodesicEngine::new(mesh);
    let timings = par::try_map(cfg.parallelism, &jobs, |(source, targets)| {
        let t0 = Instant::now();
        let solver = engine.build_solver(*source)?;
        let build = t0.elapsed();
        let mut query = Duration::ZERO;
        for t in targets {
            let t0 = Instant::now();
            let path = solver.query_path(t)?;
            query += t0.elapsed();
            std::hint::black_box(path);
        }
        Ok::<_, crate::Error>((build, query))
    })?;
    let builds = timings.len();
    let build_total: Duration = timings.iter().map(|t| t.0).sum();
    let query_total: Duration = timings.iter().map(|t| t.1).sum();
    let n_queries = builds * cfg.queries;
    Ok(BenchRow {
        mesh: name.to_string(),
        n_v: mesh.n_vertices(),
        n_f: mesh.n_faces(),
        delta_const: if builds > 0 { build_total.as_secs_f64() / builds as f64 } else { 0.0 },
        delta_query: if n_queries > 0 { query_total.as_secs_f64() / n_queries as f64 } else { 0.0 },
        builds,
        queries: n_queries,
    })
}

/// Regenerates every mesh of the timing table and benchmarks it.
pub fn bench_table(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    TableMesh::ALL
        .iter()
        .map(|t| bench_mesh(t.name(), &t.generate()?, cfg))
        .collect()
}

/// `3.8s`, `40ms`, `12µs`.
pub fn format_duration(secs: f64) -> String {
    if secs >= 1.0 {
        format!("{secs:.2}s")
    } else if secs >= 1e-3 {
        format!("{:.2}ms", secs * 1e3)
    } else {
        format!("{:.2}µs", secs * 1e6)
    }
}

/// Plain-text table with the columns mesh, n_v, n_f, δ_const, δ_query.
pub fn format_table(rows: &[BenchRow]) -> String {
    let width = rows.iter().map(|r| r.mesh.chars().count()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>10}  {:>10}", "mesh", "n_v", "n_f", "δ_const", "δ_query");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>10}  {:>10}",
            r.mesh,
            r.n_v,
            r.n_f,
            format_duration(r.delta_const),
            format_duration(r.delta_query)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{generate_graph_mesh, GraphFn};

    #[test]
    fn single_face_mesh() {
        let m = Mesh::new(
            vec![
                crate::Vec3::zeros(),
                crate::Vec3::x(),
                crate::Vec3::y(),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let row = bench_mesh("tri", &m, &BenchConfig::default()).unwrap();
        assert_eq!((row.n_v, row.n_f, row.builds, row.queries), (3, 1, 3, 60));
        assert!(row.delta_const >= 0.0 && row.delta_query >= 0.0);
    }

    #[test]
    fn table_text() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (5, 5)).unwrap();
        let row = bench_mesh("flat", &m, &BenchConfig { sources: 2, queries: 3, ..Default::default() }).unwrap();
        let text = format_table(&[row]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("δ_const") && lines[0].contains("δ_query"));
        assert!(lines[1].starts_with("flat") && lines[1].contains("25") && lines[1].contains("32"));
        assert_eq!(format_duration(3.8), "3.80s");
        assert_eq!(format_duration(0.04), "40.00ms");
        assert_eq!(format_duration(1e-6), "1.00µs");
    }

    #[test]
    fn random_points_are_valid() {
        let m = generate_graph_mesh(GraphFn::Bumps, [-2.0, 2.0, -2.0, 2.0], (8, 8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            m.check_point(&random_point(&m, &mut rng)).unwrap();
        }
    }
}
