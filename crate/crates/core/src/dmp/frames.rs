use nalgebra::{Rotation3, UnitQuaternion};

use super::Trajectory;
use crate::mesh::{Mat3, Mesh, SurfacePoint, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t: f64,
    pub y: SurfacePoint,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoseTrajectory {
    pub dt: f64,
    pub poses: Vec<Pose>,
}

/// Orientation set-points along a trajectory: z axis into the surface, the
/// in-plane axes carried over from the previous pose with the smallest
/// rotation, then a first-order low-pass filter in quaternion space.
pub fn frames_along(mesh: &Mesh, traj: &Trajectory, filter_time_constant: f64) -> PoseTrajectory {
    let a = if filter_time_constant > 0.0 {
        1.0 - (-traj.dt / filter_time_constant).exp()
    } else {
        1.0
    };
    let mut poses = Vec::with_capacity(traj.rows.len());
    let mut x_prev: Option<Vec3> = None;
    let mut q_prev: Option<UnitQuaternion<f64>> = None;
    let mut q_filt: Option<UnitQuaternion<f64>> = None;
    for row in &traj.rows {
        let z_axis = -mesh.normal(row.y.face);
        let seed = x_prev.unwrap_or_else(|| {
            if row.z.norm() > 1e-12 {
                row.z
            } else {
                mesh.face_positions(row.y.face)[1] - mesh.face_positions(row.y.face)[0]
            }
        });
        let x_axis = orthogonal_unit(&z_axis, &seed);
        let y_axis = z_axis.cross(&x_axis);
        let rot = Rotation3::from_matrix_unchecked(Mat3::from_columns(&[x_axis, y_axis, z_axis]));
        let mut q = UnitQuaternion::from_rotation_matrix(&rot);
        if let Some(p) = q_prev {
            if p.coords.dot(&q.coords) < 0.0 {
                q = UnitQuaternion::new_unchecked(-q.into_inner());
            }
        }
        let out = match q_filt {
            None => q,
            Some(f) => {
                let f = if f.coords.dot(&q.coords) < 0.0 {
                    UnitQuaternion::new_unchecked(-f.into_inner())
                } else {
                    f
                };
                f.try_slerp(&q, a, 1e-12).unwrap_or(q)
            }
        };
        poses.push(Pose {
            t: row.t,
            y: row.y,
            orientation: out,
        });
        x_prev = Some(x_axis);
        q_prev = Some(q);
        q_filt = Some(out);
    }
    PoseTrajectory { dt: traj.dt, poses }
}

/// `v` with its `n` component removed, normalised. Falls back to any unit
/// vector orthogonal to `n`.
fn orthogonal_unit(n: &Vec3, v: &Vec3) -> Vec3 {
    let p = v - n * n.dot(v);
    if p.norm() > 1e-9 * v.norm().max(1e-300) {
        return p.normalize();
    }
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    (helper - n * n.dot(&helper)).normalize()
}
