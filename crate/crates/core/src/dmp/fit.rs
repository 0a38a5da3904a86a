use std::f64::consts::TAU;

use log::warn;
use nalgebra::DMatrix;

use super::{default_basis, ModelMetadata, MeshDmpModel, DEFAULT_RIDGE};
use crate::error::{Error, Result};
use crate::manifold::{local_frame, MeshManifold};
use crate::mesh::{project_norm_preserving, SurfacePoint, TangentVector, Vec3};
use crate::par::{self, Parallelism};

/// One demonstration sample: position, velocity and covariant
/// acceleration, both vectors in the tangent plane at `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoSample {
    pub y: SurfacePoint,
    pub ydot: Vec3,
    pub yddot: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub samples: Vec<DemoSample>,
    pub dt: f64,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One demonstrated cycle: `N_s · dt`.
    pub fn period(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.y.position).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Largest accepted distance from a sample to the mesh. `None` means
    /// five mean edge lengths.
    pub max_distance: Option<f64>,
    pub parallelism: Parallelism,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            max_distance: None,
            parallelism: Parallelism::default(),
        }
    }
}

/// Snaps Cartesian samples onto the mesh and estimates the covariant
/// derivative of the velocity by transporting each next velocity back.
/// The signal is treated as periodic: the last sample looks at the first.
pub fn project_demonstration(
    manifold: &MeshManifold<'_>,
    positions: &[Vec3],
    velocities: &[Vec3],
    dt: f64,
    opts: &ProjectionOptions,
) -> Result<Demonstration> {
    let mesh = manifold.mesh();
    let n = positions.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {n}")));
    }
    if velocities.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} positions but {} velocities",
            velocities.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let limit = opts.max_distance.unwrap_or(5.0 * mesh.mean_edge_length());
    let snapped = par::try_map(opts.parallelism, &(0..n).collect::<Vec<_>>(), |&k| {
        let y = mesh.closest_point(&positions[k]);
        let distance = (y.position - positions[k]).norm();
        if distance > limit {
            return Err(Error::OffSurfaceSample { index: k, distance, limit });
        }
        let ydot = match project_norm_preserving(&mesh.normal(y.face), &velocities[k]) {
            Ok(v) => v,
            Err(Error::UndefinedDirection) => Vec3::zeros(),
            Err(e) => return Err(e),
        };
        Ok((y, ydot))
    })?;
    let samples = par::try_map(opts.parallelism, &(0..n).collect::<Vec<_>>(), |&k| {
        let (y, ydot) = snapped[k];
        let (y_next, ydot_next) = snapped[(k + 1) % n];
        let back = manifold.transport_between(&y_next, &y, &ydot_next)?;
        Ok::<_, Error>(DemoSample {
            y,
            ydot,
            yddot: (back.vec - ydot) / dt,
        })
    })?;
    Ok(Demonstration { samples, dt })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub alpha: f64,
    pub beta: f64,
    /// `None` derives `Ω = N_s dt / 2π` from the demonstration.
    pub omega: Option<f64>,
    pub n_basis: usize,
    pub ridge: f64,
    pub parallelism: Parallelism,
}

impl FitParams {
    /// `β = α / 4`, `Ω` from the demonstration.
    pub fn new(alpha: f64, n_basis: usize) -> Self {
        FitParams {
            alpha,
            beta: alpha / 4.0,
            omega: None,
            n_basis,
            ridge: DEFAULT_RIDGE,
            parallelism: Parallelism::default(),
        }
    }
}

/// Learns the forcing weights of a periodic primitive centred on `goal`.
pub fn fit(
    manifold: &MeshManifold<'_>,
    demo: &Demonstration,
    goal: &SurfacePoint,
    params: &FitParams,
) -> Result<MeshDmpModel> {
    let mesh = manifold.mesh();
    let ns = demo.samples.len();
    if ns < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {ns}")));
    }
    if !(demo.dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", demo.dt)));
    }
    if params.n_basis == 0 {
        return Err(Error::InvalidInput("n_basis must be at least 1".into()));
    }
    mesh.check_point(goal)?;
    let omega = params.omega.unwrap_or(demo.period() / TAU);
    let (alpha, beta) = (params.alpha, params.beta);

    let solver = manifold.engine().build_solver(*goal)?;
    let logs = par::try_map(params.parallelism, &demo.samples, |s| manifold.log_to_source(&solver, &s.y))?;

    let r0 = logs[0].norm();
    let (r, r_fallback) = if r0 < 1e-9 {
        warn!("start is within 1e-9 m of the goal, using r = 1");
        (1.0, true)
    } else {
        (r0, false)
    };

    let max_speed = demo.samples.iter().map(|s| s.ydot.norm()).fold(0.0, f64::max);
    let speed_floor = 1e-9 * max_speed.max(1.0);
    let mut rows = Vec::with_capacity(ns);
    let mut targets = Vec::with_capacity(ns);
    let mut dropped = Vec::new();
    for (k, (s, log)) in demo.samples.iter().zip(&logs).enumerate() {
        if s.ydot.norm() <= speed_floor {
            dropped.push(k);
            continue;
        }
        let t = local_frame(mesh, &s.y, &s.ydot)?;
        let f_world = s.yddot / (omega * omega) - (log.vec * beta - s.ydot / omega) * alpha;
        targets.push(t.transpose() * f_world / r);
        rows.push(k as f64 * demo.dt / omega);
    }
    if !dropped.is_empty() {
        warn!(
            "dropped {} of {ns} samples with zero velocity (first: {})",
            dropped.len(),
            dropped[0]
        );
    }
    if rows.is_empty() {
        return Err(Error::Fit {
            index: dropped[0],
            reason: "velocity is zero, local frame undefined".into(),
        });
    }

    let (centers, widths) = default_basis(params.n_basis);
    let psi: Vec<Vec<f64>> = rows
        .iter()
        .map(|&phi| {
            let p = super::basis_values(phi, &centers, &widths);
            let total: f64 = p.iter().sum();
            p.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), params.n_basis, |k, i| psi[k][i]);
    let f = DMatrix::from_fn(rows.len(), 3, |k, j| targets[k][j]);
    let w = ridge_solve(&a, &f, params.ridge)?;
    let residual = (&a * &w - &f).norm() * r / (rows.len() as f64).sqrt();

    let z0 = demo.samples[0].ydot / omega;
    let initial_velocity_local = (logs[0].norm() > 1e-12)
        .then(|| local_frame(mesh, &demo.samples[0].y, &logs[0].vec))
        .transpose()?
        .map(|frame| (frame.transpose() * z0 / r).into());

    let model = MeshDmpModel {
        alpha,
        beta,
        omega,
        n_basis: params.n_basis,
        centers,
        widths,
        weights: (0..params.n_basis).map(|i| [w[(i, 0)], w[(i, 1)], w[(i, 2)]]).collect(),
        goal: *goal,
        start: demo.samples[0].y,
        r,
        metadata: ModelMetadata {
            r_fallback,
            dropped_samples: dropped,
            n_samples: ns,
            dt: demo.dt,
            fit_residual: residual,
            initial_velocity_local,
        },
    };
    model.validate()?;
    Ok(model)
}

/// `(AᵀA + λI)⁻¹ Aᵀ B`.
fn ridge_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let n = a.ncols();
    let g = a.transpose() * a + DMatrix::identity(n, n) * ridge;
    let rhs = a.transpose() * b;
    if let Some(ch) = g.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    g.lu().solve(&rhs).ok_or_else(|| Error::Fit {
        index: 0,
        reason: "normal equations are singular".into(),
    })
}

impl MeshDmpModel {
    /// Initial `z` at `start` that replays the demonstrated initial
    /// velocity relative to the direction towards `goal`. Falls back to the
    /// direction of the first tangent edge when `start` is the goal.
    pub fn initial_z(&self, manifold: &MeshManifold<'_>, start: &SurfacePoint, goal: &SurfacePoint) -> Result<TangentVector> {
        let mesh = manifold.mesh();
        let Some(local) = self.metadata.initial_velocity_local else {
            return Ok(TangentVector::zero(*start));
        };
        let log = manifold.log_map(start, goal)?;
        let dir = if log.norm() > 1e-12 {
            log.vec
        } else {
            mesh.tangent_basis(start)?.0
        };
        let frame = local_frame(mesh, start, &dir)?;
        Ok(TangentVector {
            base: *start,
            vec: frame * Vec3::from(local) * self.r,
        })
    }

    /// Moves the primitive to a new start and goal. `r` is recomputed from
    /// the new pair so the learned shape scales with the start distance.
    pub fn retarget(&mut self, manifold: &MeshManifold<'_>, start: &SurfacePoint, goal: &SurfacePoint) -> Result<()> {
        let mesh = manifold.mesh();
        mesh.check_point(start)?;
        mesh.check_point(goal)?;
        let d = manifold.log_map(start, goal)?.norm();
        self.r = if d < 1e-9 {
            warn!("start is within 1e-9 m of the goal, using r = 1");
            1.0
        } else {
            d
        };
        self.metadata.r_fallback = d < 1e-9;
        self.start = *start;
        self.goal = *goal;
        Ok(())
    }
}
