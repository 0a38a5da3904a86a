//! Edge-subdivision graph: mesh vertices plus `k` evenly spaced points on
//! every edge, with an arc between any two nodes on the boundary of a
//! common face. Arcs are implicit; only node positions are stored.

use std::cmp::Ordering;
use std::collections::hash_map::Entry as MapEntry;
use std::collections::{BinaryHeap, HashMap};

use crate::mesh::{Mesh, SurfacePoint, Vec3};

pub(crate) const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct SteinerGraph {
    k: usize,
    n_v: usize,
    positions: Vec<Vec3>,
}

impl SteinerGraph {
    pub fn new(mesh: &Mesh, k: usize) -> Self {
        let n_v = mesh.n_vertices();
        let mut positions = Vec::with_capacity(n_v + k * mesh.n_edges());
        positions.extend_from_slice(mesh.vertices());
        for &[a, b] in mesh.edges() {
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            for j in 0..k {
                let t = (j + 1) as f64 / (k + 1) as f64;
                positions.push(pa * (1.0 - t) + pb * t);
            }
        }
        SteinerGraph { k, n_v, positions }
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    /// Faces on whose boundary node `n` lies.
    pub fn node_faces<'m>(&self, mesh: &'m Mesh, n: usize) -> &'m [usize] {
        if n < self.n_v {
            mesh.vertex_faces(n)
        } else {
            mesh.edge_faces((n - self.n_v) / self.k)
        }
    }

    pub fn face_nodes(&self, mesh: &Mesh, f: usize) -> impl Iterator<Item = usize> + '_ {
        let tri = mesh.face(f);
        let edges = mesh.face_edges(f);
        let (n_v, k) = (self.n_v, self.k);
        tri.into_iter()
            .chain(edges.into_iter().flat_map(move |e| (0..k).map(move |j| n_v + e * k + j)))
    }

    /// Graph nodes reachable from `p` inside one of its incident faces,
    /// with the straight-line cost.
    pub fn attach(&self, mesh: &Mesh, p: &SurfacePoint) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for f in mesh.incident_faces(p) {
            for n in self.face_nodes(mesh, f) {
                out.push((n, (self.positions[n] - p.position).norm()));
            }
        }
        out.sort_by_key(|x| x.0);
        out.dedup_by_key(|x| x.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on key, ties by node id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances over the whole graph.
#[derive(Debug, Clone)]
pub(crate) struct DistanceField {
    pub dist: Vec<f64>,
    pub prev: Vec<u32>,
}

impl DistanceField {
    /// Best graph node to leave towards a target attached by `seeds`.
    pub fn resolve(&self, seeds: &[(usize, f64)]) -> Option<(usize, f64)> {
        seeds
            .iter()
            .map(|&(n, w)| (n, self.dist[n] + w))
            .filter(|x| x.1.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Node chain from the source side to `end`.
    pub fn chain(&self, end: usize) -> Vec<usize> {
        let mut out = vec![end];
        let mut n = end;
        while self.prev[n] != NO_NODE {
            n = self.prev[n] as usize;
            out.push(n);
        }
        out.reverse();
        out
    }
}

pub(crate) fn dijkstra(graph: &SteinerGraph, mesh: &Mesh, seeds: &[(usize, f64)]) -> DistanceField {
    let n = graph.n_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![NO_NODE; n];
    let mut heap = BinaryHeap::new();
    for &(s, d) in seeds {
        if d < dist[s] {
            dist[s] = d;
            heap.push(Entry {
                key: d,
                node: s as u32,
            });
        }
    }
    while let Some(Entry { key, node }) = heap.pop() {
        let u = node as usize;
        if key > dist[u] {
            continue;
        }
        let pu = graph.positions[u];
        for &f in graph.node_faces(mesh, u) {
            for v in graph.face_nodes(mesh, f) {
                if v == u {
                    continue;
                }
                let nd = key + (graph.positions[v] - pu).norm();
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = node;
                    heap.push(Entry {
                        key: nd,
                        node: v as u32,
                    });
                }
            }
        }
    }
    DistanceField { dist, prev }
}

/// Point-to-point A* with the Euclidean distance to the target as
/// heuristic. Returns the node chain and its cost.
pub(crate) fn astar(
    graph: &SteinerGraph,
    mesh: &Mesh,
    seeds: &[(usize, f64)],
    exits: &[(usize, f64)],
    target: &Vec3,
) -> Option<(Vec<usize>, f64)> {
    let exit_cost: HashMap<usize, f64> = exits.iter().copied().collect();
    let h = |n: usize| (graph.positions[n] - target).norm();
    let mut table: HashMap<usize, (f64, u32)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for &(s, d) in seeds {
        let better = table.get(&s).is_none_or(|&(old, _)| d < old);
        if better {
            table.insert(s, (d, NO_NODE));
            heap.push(Entry {
                key: d + h(s),
                node: s as u32,
            });
        }
    }
    let mut best: Option<(usize, f64)> = None;
    while let Some(Entry { key, node }) = heap.pop() {
        if let Some((_, c)) = best {
            if key >= c {
                break;
            }
        }
        let u = node as usize;
        let g = table[&u].0;
        if key > g + h(u) + 1e-12 * key.abs().max(1.0) {
            continue;
        }
        if let Some(&w) = exit_cost.get(&u) {
            let total = g + w;
            if best.is_none_or(|(_, c)| total < c) {
                best = Some((u, total));
            }
        }
        let pu = graph.positions[u];
        for &f in graph.node_faces(mesh, u) {
            for v in graph.face_nodes(mesh, f) {
                if v == u {
                    continue;
                }
                let nd = g + (graph.positions[v] - pu).norm();
                let improve = match table.entry(v) {
                    MapEntry::Occupied(mut o) => {
                        if nd < o.get().0 {
                            o.insert((nd, node));
                            true
                        } else {
                            false
                        }
                    }
                    MapEntry::Vacant(slot) => {
                        slot.insert((nd, node));
                        true
                    }
                };
                if improve {
                    heap.push(Entry {
                        key: nd + h(v),
                        node: v as u32,
                    });
                }
            }
        }
    }
    let (end, cost) = best?;
    let mut chain = vec![end];
    let mut n = end;
    while table[&n].1 != NO_NODE {
        n = table[&n].1 as usize;
        chain.push(n);
    }
    chain.reverse();
    Some((chain, cost))
}
