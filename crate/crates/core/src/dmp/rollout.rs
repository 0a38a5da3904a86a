use crate::error::{Error, Result};
use crate::geodesic::GeodesicSolver;
use crate::manifold::{local_frame, transport_along_walk, MeshManifold};
use crate::mesh::{project_plane, SurfacePoint, Vec3};

use super::MeshDmpModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpState {
    pub y: SurfacePoint,
    /// Scaled velocity, tangent at `y`.
    pub z: Vec3,
    pub phi: f64,
    pub t: f64,
}

/// Piecewise-constant centre: entry `(t_i, g_i)` holds from `t_i` until the
/// next entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CenterSchedule {
    entries: Vec<(f64, SurfacePoint)>,
}

impl CenterSchedule {
    pub fn new(entries: Vec<(f64, SurfacePoint)>) -> Result<Self> {
        if entries.iter().any(|(t, _)| !t.is_finite()) {
            return Err(Error::InvalidInput("schedule times must be finite".into()));
        }
        if entries.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidInput("schedule times must be sorted".into()));
        }
        Ok(CenterSchedule { entries })
    }

    pub fn entries(&self) -> &[(f64, SurfacePoint)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn center_at(&self, t: f64) -> Option<SurfacePoint> {
        let i = self.entries.partition_point(|(ti, _)| *ti <= t);
        (i > 0).then(|| self.entries[i - 1].1)
    }
}

/// Steps a model while keeping one geodesic solver rooted at the current
/// centre. The solver is rebuilt whenever the centre moves.
pub struct Integrator<'a, 'm> {
    manifold: &'a MeshManifold<'m>,
    model: &'a MeshDmpModel,
    goal: SurfacePoint,
    solver: GeodesicSolver<'m>,
    rebuilds: usize,
}

impl<'a, 'm> Integrator<'a, 'm> {
    pub fn new(manifold: &'a MeshManifold<'m>, model: &'a MeshDmpModel) -> Result<Self> {
        Self::with_goal(manifold, model, model.goal)
    }

    pub fn with_goal(manifold: &'a MeshManifold<'m>, model: &'a MeshDmpModel, goal: SurfacePoint) -> Result<Self> {
        model.validate()?;
        let solver = manifold.engine().build_solver(goal)?;
        Ok(Integrator {
            manifold,
            model,
            goal,
            solver,
            rebuilds: 0,
        })
    }

    pub fn goal(&self) -> &SurfacePoint {
        &self.goal
    }

    /// Number of solver rebuilds caused by centre changes.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn set_goal(&mut self, goal: SurfacePoint) -> Result<()> {
        if goal.key() != self.goal.key() {
            self.solver = self.manifold.engine().build_solver(goal)?;
            self.goal = goal;
            self.rebuilds += 1;
        }
        Ok(())
    }

    /// One explicit-Euler step. The position follows the exponential map
    /// and the updated velocity is carried along the same walk.
    pub fn step(&mut self, state: &DmpState, dt: f64, center_override: Option<&SurfacePoint>) -> Result<DmpState> {
        if let Some(g) = center_override {
            self.set_goal(*g)?;
        }
        let mesh = self.manifold.mesh();
        let m = self.model;
        let log = self.manifold.log_to_source(&self.solver, &state.y)?.vec;
        let f_world = if m.has_forcing() {
            local_frame(mesh, &state.y, &state.z)? * m.forcing(state.phi)
        } else {
            Vec3::zeros()
        };
        let n = mesh.normal(state.y.face);
        let dz = project_plane(&n, &((log * m.beta - state.z) * m.alpha + f_world)) * m.omega;
        let z_tentative = state.z + dz * dt;
        let walk = self.manifold.exp_walk(&state.y, &(state.z * (dt * m.omega)))?;
        let z = transport_along_walk(mesh, &walk, &z_tentative)?.vec;
        Ok(DmpState {
            y: walk.end(),
            z,
            phi: state.phi + dt / m.omega,
            t: state.t + dt,
        })
    }
}

/// One step with a throw-away integrator.
pub fn step(
    manifold: &MeshManifold<'_>,
    model: &MeshDmpModel,
    state: &DmpState,
    dt: f64,
    center_override: Option<&SurfacePoint>,
) -> Result<DmpState> {
    let goal = center_override.copied().unwrap_or(model.goal);
    Integrator::with_goal(manifold, model, goal)?.step(state, dt, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub y: SurfacePoint,
    pub z: Vec3,
    pub phi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.rows.iter().map(|r| r.y.position).collect()
    }
}

/// A rollout and, if it stopped early, why.
#[derive(Debug)]
pub struct RolloutOutcome {
    pub trajectory: Trajectory,
    pub error: Option<Error>,
    pub rebuilds: usize,
}

/// Integrates `round(duration / dt)` steps and records the state before
/// each one. Stops at the first error and returns the rows so far.
pub fn rollout_partial(
    manifold: &MeshManifold<'_>,
    model: &MeshDmpModel,
    start: &SurfacePoint,
    initial_z: &Vec3,
    duration: f64,
    dt: f64,
    schedule: Option<&CenterSchedule>,
) -> Result<RolloutOutcome> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput(format!("duration must be non-negative, got {duration}")));
    }
    let mesh = manifold.mesh();
    mesh.check_point(start)?;
    let n = (duration / dt).round() as usize;
    let center = |t: f64| schedule.and_then(|s| s.center_at(t)).unwrap_or(model.goal);
    let mut integrator = Integrator::with_goal(manifold, model, center(0.0))?;
    let mut state = DmpState {
        y: *start,
        z: project_plane(&mesh.normal(start.face), initial_z),
        phi: 0.0,
        t: 0.0,
    };
    let mut rows = Vec::with_capacity(n);
    let mut error = None;
    for i in 0..n {
        rows.push(TrajectoryRow {
            t: state.t,
            y: state.y,
            z: state.z,
            phi: state.phi,
        });
        if i + 1 == n {
            break;
        }
        let g = center(state.t);
        match integrator.step(&state, dt, Some(&g)) {
            Ok(mut next) => {
                // exact phase law, no drift from summing dt
                next.t = (i + 1) as f64 * dt;
                next.phi = next.t / model.omega;
                state = next;
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    Ok(RolloutOutcome {
        trajectory: Trajectory { dt, rows },
        error,
        rebuilds: integrator.rebuilds(),
    })
}

/// [`rollout_partial`] that fails on any step error.
pub fn rollout(
    manifold: &MeshManifold<'_>,
    model: &MeshDmpModel,
    start: &SurfacePoint,
    initial_z: &Vec3,
    duration: f64,
    dt: f64,
    schedule: Option<&CenterSchedule>,
) -> Result<Trajectory> {
    let out = rollout_partial(manifold, model, start, initial_z, duration, dt, schedule)?;
    match out.error {
        Some(e) => Err(e),
        None => Ok(out.trajectory),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{generate_graph_mesh, GraphFn};

    #[test]
    fn schedule_lookup() {
        let m = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (3, 3)).unwrap();
        let a = m.point(0, [1.0, 0.0, 0.0]);
        let b = m.point(3, [0.0, 1.0, 0.0]);
        let s = CenterSchedule::new(vec![(1.0, a), (2.0, b)]).unwrap();
        assert_eq!(s.center_at(0.5), None);
        assert_eq!(s.center_at(1.0), Some(a));
        assert_eq!(s.center_at(1.99), Some(a));
        assert_eq!(s.center_at(7.0), Some(b));
        assert!(CenterSchedule::new(vec![(2.0, a), (1.0, b)]).is_err());
    }

    #[test]
    fn equilibrium_is_fixed() {
        let m = generate_graph_mesh(GraphFn::Zero, [-1.0, 1.0, -1.0, 1.0], (6, 6)).unwrap();
        let man = MeshManifold::new(&m);
        let g = m.point(20, [0.2, 0.3, 0.5]);
        let model = MeshDmpModel::unfitted(22.0, 5.5, 1.0, 10, g, g);
        let traj = rollout(&man, &model, &g, &Vec3::zeros(), 0.5, 0.01, None).unwrap();
        assert_eq!(traj.len(), 50);
        for r in &traj.rows {
            assert!((r.y.position - g.position).norm() < 1e-15);
            assert_eq!(r.z, Vec3::zeros());
        }
    }

    #[test]
    fn row_count_and_phase_law() {
        let m = generate_graph_mesh(GraphFn::Zero, [-1.0, 1.0, -1.0, 1.0], (6, 6)).unwrap();
        let man = MeshManifold::new(&m);
        let g = m.point(20, [0.2, 0.3, 0.5]);
        let y0 = m.point(7, [0.6, 0.2, 0.2]);
        let model = MeshDmpModel::unfitted(22.0, 5.5, 0.7, 10, g, y0);
        let traj = rollout(&man, &model, &y0, &Vec3::zeros(), 0.3, 1e-3, None).unwrap();
        assert_eq!(traj.len(), 300);
        for (i, r) in traj.rows.iter().enumerate() {
            assert_eq!(r.t, i as f64 * 1e-3);
            assert_eq!(r.phi, r.t / 0.7);
        }
        assert!(rollout(&man, &model, &y0, &Vec3::zeros(), 0.0, 1e-3, None).unwrap().is_empty());
    }
}
