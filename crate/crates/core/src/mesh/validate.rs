use serde::{Deserialize, Serialize};

use super::Mesh;

/// Adjacent faces whose normals disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationViolation {
    pub faces: [usize; 2],
    pub edge: [usize; 2],
    pub dot: f64,
}

/// Result of [`Mesh::validate`]. Boundary edges are reported but are not
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_vertices: usize,
    pub n_faces: usize,
    pub threshold: f64,
    pub non_manifold_edges: Vec<[usize; 2]>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub orientation_violations: Vec<OrientationViolation>,
    pub degenerate_faces: Vec<usize>,
    pub is_manifold: bool,
    pub is_orientable: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.is_manifold && self.is_orientable
    }
}

impl Mesh {
    /// Checks that every edge has at most two faces and that the normals of
    /// every adjacent face pair have a dot product above
    /// `normal_dot_threshold`.
    pub fn validate(&self, normal_dot_threshold: f64) -> ValidationReport {
        let mut non_manifold_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut orientation_violations = Vec::new();
        for (e, faces) in self.edge_faces.iter().enumerate() {
            match faces.len() {
                1 => boundary_edges.push(self.edges[e]),
                2 => {}
                _ => non_manifold_edges.push(self.edges[e]),
            }
            for (i, &a) in faces.iter().enumerate() {
                for &b in &faces[i + 1..] {
                    let dot = self.normals[a].dot(&self.normals[b]);
                    if dot <= normal_dot_threshold {
                        orientation_violations.push(OrientationViolation {
                            faces: [a.min(b), a.max(b)],
                            edge: self.edges[e],
                            dot,
                        });
                    }
                }
            }
        }
        if !orientation_violations.is_empty() {
            log::warn!(
                "{} adjacent face pairs have normal dot <= {normal_dot_threshold}",
                orientation_violations.len()
            );
        }
        let degenerate_faces = (0..self.n_faces())
            .filter(|&f| self.is_degenerate(f))
            .collect();
        ValidationReport {
            n_vertices: self.n_vertices(),
            n_faces: self.n_faces(),
            threshold: normal_dot_threshold,
            is_manifold: non_manifold_edges.is_empty(),
            is_orientable: orientation_violations.is_empty(),
            non_manifold_edges,
            boundary_edges,
            orientation_violations,
            degenerate_faces,
        }
    }
}
