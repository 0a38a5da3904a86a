//! Periodic dynamic movement primitives on a mesh.
//!
//! The transformation system is
//!
//! ```text
//! ∇_z z = Ω (α (β Log_y(g) − z) + T(y, z) f(φ))
//!     ẏ = Ω z
//!   Ω φ̇ = 1
//! ```
//!
//! with `f` a normalised mixture of periodic basis functions expressed in
//! the velocity-aligned frame `T(y, z)`.

mod fit;
mod frames;
mod rollout;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint, Vec3};

pub use fit::{fit, project_demonstration, Demonstration, DemoSample, FitParams, ProjectionOptions};
pub use frames::{frames_along, Pose, PoseTrajectory};
pub use rollout::{
    rollout, rollout_partial, step, CenterSchedule, DmpState, Integrator, RolloutOutcome, Trajectory, TrajectoryRow,
};

/// Ridge term of the weight regression.
pub const DEFAULT_RIDGE: f64 = 1e-9;

/// Fitting record kept next to the weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// `r` fell back to 1 because the start coincided with the goal.
    #[serde(default)]
    pub r_fallback: bool,
    /// Samples left out of the regression for lack of a velocity frame.
    #[serde(default)]
    pub dropped_samples: Vec<usize>,
    #[serde(default)]
    pub n_samples: usize,
    #[serde(default)]
    pub dt: f64,
    /// RMS of the regression residual, in forcing units.
    #[serde(default)]
    pub fit_residual: f64,
    /// First demonstrated `z / r` in the frame built from `Log_{y₀}(g)`,
    /// used to pick an initial velocity for new start points.
    #[serde(default)]
    pub initial_velocity_local: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDmpModel {
    pub alpha: f64,
    pub beta: f64,
    /// Seconds per radian of phase.
    pub omega: f64,
    pub n_basis: usize,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// One 3-vector per basis function, in the local frame.
    pub weights: Vec<[f64; 3]>,
    pub goal: SurfacePoint,
    pub start: SurfacePoint,
    pub r: f64,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

/// Centres `2π i / N` and uniform widths `2.5 N`.
pub fn default_basis(n_basis: usize) -> (Vec<f64>, Vec<f64>) {
    let centers = (0..n_basis).map(|i| TAU * i as f64 / n_basis as f64).collect();
    let widths = vec![2.5 * n_basis as f64; n_basis];
    (centers, widths)
}

/// `Ψ_i(φ) = exp(h_i (cos(φ − c_i) − 1))`.
pub fn basis_values(phi: f64, centers: &[f64], widths: &[f64]) -> Vec<f64> {
    centers
        .iter()
        .zip(widths)
        .map(|(c, h)| (h * ((phi - c).cos() - 1.0)).exp())
        .collect()
}

impl MeshDmpModel {
    /// A model with the default basis and zero weights.
    pub fn unfitted(alpha: f64, beta: f64, omega: f64, n_basis: usize, goal: SurfacePoint, start: SurfacePoint) -> Self {
        let (centers, widths) = default_basis(n_basis);
        MeshDmpModel {
            alpha,
            beta,
            omega,
            n_basis,
            centers,
            widths,
            weights: vec![[0.0; 3]; n_basis],
            goal,
            start,
            r: 1.0,
            metadata: ModelMetadata::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("omega", self.omega)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.n_basis == 0 {
            return bad("n_basis must be at least 1".into());
        }
        if self.centers.len() != self.n_basis || self.widths.len() != self.n_basis || self.weights.len() != self.n_basis {
            return bad(format!(
                "expected {} centres, widths and weights, got {}, {} and {}",
                self.n_basis,
                self.centers.len(),
                self.widths.len(),
                self.weights.len()
            ));
        }
        if self.widths.iter().any(|h| !(*h > 0.0)) {
            return bad("basis widths must be positive".into());
        }
        let ordered = self.centers.windows(2).all(|w| w[0] < w[1]);
        if !ordered || self.centers.iter().any(|c| !(0.0..TAU).contains(c)) {
            return bad("centres must be strictly increasing in [0, 2π)".into());
        }
        if self.weights.iter().flatten().any(|w| !w.is_finite()) {
            return bad("weights must be finite".into());
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return bad(format!("r must be non-negative, got {}", self.r));
        }
        Ok(())
    }

    pub fn basis(&self, phi: f64) -> Vec<f64> {
        basis_values(phi, &self.centers, &self.widths)
    }

    /// `f(φ) = r Σ Ψ_i w_i / Σ Ψ_i`, in the local frame.
    pub fn forcing(&self, phi: f64) -> Vec3 {
        let psi = self.basis(phi);
        let total: f64 = psi.iter().sum();
        let mut f = Vec3::zeros();
        for (p, w) in psi.iter().zip(&self.weights) {
            f += Vec3::from(*w) * *p;
        }
        f * (self.r / total)
    }

    pub fn has_forcing(&self) -> bool {
        self.r != 0.0 && self.weights.iter().flatten().any(|w| *w != 0.0)
    }

    pub fn zero_weights(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = [0.0; 3]);
    }

    /// Recomputes the cached positions of `goal` and `start` on `mesh`,
    /// e.g. after loading from JSON.
    pub fn bind(&mut self, mesh: &Mesh) -> Result<()> {
        self.goal = mesh.surface_point(self.goal.face, self.goal.bary)?;
        self.start = mesh.surface_point(self.start.face, self.start.bary)?;
        Ok(())
    }

    /// Period of the phase in seconds.
    pub fn period(&self) -> f64 {
        TAU * self.omega
    }
}

/// `forcing` as a free function.
pub fn forcing(model: &MeshDmpModel, phi: f64) -> Vec3 {
    model.forcing(phi)
}

/// `basis` as a free function.
pub fn basis(phi: f64, model: &MeshDmpModel) -> Vec<f64> {
    model.basis(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(n: usize) -> MeshDmpModel {
        let p = SurfacePoint {
            face: 0,
            bary: [1.0, 0.0, 0.0],
            position: Vec3::zeros(),
        };
        MeshDmpModel::unfitted(22.0, 5.5, 1.0, n, p, p)
    }

    #[test]
    fn basis_peaks_and_period() {
        let m = model(5);
        for (i, c) in m.centers.iter().enumerate() {
            assert_relative_eq!(m.basis(*c)[i], 1.0);
            let a = m.basis(0.37 + c);
            let b = m.basis(0.37 + c + TAU);
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(x, y, epsilon = 1e-12);
            }
        }
        let v = basis_values(1.0 + std::f64::consts::PI, &[1.0], &[1.0]);
        assert_relative_eq!(v[0], (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn forcing_cases() {
        let mut m = model(1);
        assert_eq!(m.forcing(0.3), Vec3::zeros());
        m.weights[0] = [1.0, -2.0, 0.5];
        m.r = 3.0;
        for phi in [0.0, 1.0, 4.0] {
            assert_relative_eq!(m.forcing(phi), Vec3::new(3.0, -6.0, 1.5), epsilon = 1e-12);
        }
        let mut m = model(2);
        m.weights = vec![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
        let mid = 0.5 * (m.centers[0] + m.centers[1]);
        assert_relative_eq!(m.forcing(mid), Vec3::new(0.5, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn validation() {
        let mut m = model(4);
        assert!(m.validate().is_ok());
        m.centers.swap(0, 1);
        assert!(m.validate().is_err());
        let mut m = model(4);
        m.r = -1.0;
        assert!(m.validate().is_err());
        let mut m = model(4);
        m.weights[2][1] = f64::NAN;
        assert!(m.validate().is_err());
    }

    #[test]
    fn json_round_trip_keeps_fields() {
        let mut m = model(3);
        m.weights[1] = [0.25, 1.5, -3.0];
        m.metadata.dropped_samples = vec![4, 9];
        let s = serde_json::to_string(&m).unwrap();
        let back: MeshDmpModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.metadata, m.metadata);
        assert_eq!(back.goal.bary, m.goal.bary);
    }
}
