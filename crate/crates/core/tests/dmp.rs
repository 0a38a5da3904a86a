mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use meshdmp_core::dmp::{
    fit, frames_along, project_demonstration, rollout, rollout_partial, CenterSchedule, FitParams, MeshDmpModel,
    ProjectionOptions, Trajectory, TrajectoryRow,
};
use meshdmp_core::manifold::MeshManifold;
use meshdmp_core::surface::{bump_surface_mesh, generate_graph_mesh, generate_preset_mesh, GraphFn, Preset, BUMP_DOMAIN};
use meshdmp_core::{Error, Mesh, Vec3};

fn flat(n: usize) -> Mesh {
    generate_graph_mesh(GraphFn::Zero, BUMP_DOMAIN, (n, n)).unwrap()
}

fn circle(radius: f64, speed: f64, n: usize, z: f64) -> (Vec<Vec3>, Vec<Vec3>, f64) {
    let period = TAU * radius / speed;
    let dt = period / n as f64;
    let w = TAU / period;
    let pos = (0..n)
        .map(|k| {
            let t = w * k as f64 * dt;
            Vec3::new(radius * t.cos(), radius * t.sin(), z)
        })
        .collect();
    let vel = (0..n)
        .map(|k| {
            let t = w * k as f64 * dt;
            Vec3::new(-t.sin(), t.cos(), 0.0) * speed
        })
        .collect();
    (pos, vel, dt)
}

#[test]
fn straight_line_has_zero_covariant_derivative() {
    let mesh = flat(10);
    let man = MeshManifold::new(&mesh);
    let v = Vec3::new(0.3, -0.2, 0.0);
    let pos: Vec<Vec3> = (0..40).map(|k| Vec3::new(-1.0, 0.5, 0.0) + v * (k as f64 * 0.05)).collect();
    let vel = vec![v; 40];
    let demo = project_demonstration(&man, &pos, &vel, 0.05, &ProjectionOptions::default()).unwrap();
    // the last sample wraps to the first, which is not a straight continuation
    for s in &demo.samples[..39] {
        assert!(s.yddot.norm() < 1e-9, "{}", s.yddot.norm());
        assert!((s.ydot - v).norm() < 1e-12);
    }
}

#[test]
fn circle_covariant_derivative_is_centripetal() {
    let mesh = flat(12);
    let man = MeshManifold::new(&mesh);
    let (rho, speed) = (1.2, 0.8);
    let (pos, vel, dt) = circle(rho, speed, 1000, 0.0);
    let demo = project_demonstration(&man, &pos, &vel, dt, &ProjectionOptions::default()).unwrap();
    let expected = speed * speed / rho;
    for s in &demo.samples {
        assert!((s.yddot.norm() - expected).abs() < 0.02 * expected);
        assert!(s.yddot.dot(&s.y.position) < 0.0);
    }
}

#[test]
fn great_circle_is_nearly_geodesic() {
    let mesh = generate_preset_mesh(Preset::Icosphere {
        radius: 1.0,
        subdivisions: 4,
    })
    .unwrap();
    let man = MeshManifold::new(&mesh);
    let (pos, vel, dt) = circle(1.0, 1.0, 1000, 0.0);
    let demo = project_demonstration(&man, &pos, &vel, dt, &ProjectionOptions::default()).unwrap();
    let mean = demo.samples.iter().map(|s| s.yddot.norm()).sum::<f64>() / demo.len() as f64;
    // the Euclidean acceleration of this curve has norm 1
    assert!(mean < 0.1, "mean covariant acceleration {mean}");
}

#[test]
fn off_surface_sample_is_rejected() {
    let mesh = flat(6);
    let man = MeshManifold::new(&mesh);
    let (mut pos, vel, dt) = circle(1.0, 1.0, 50, 0.0);
    pos[7].z = 10.0;
    let err = project_demonstration(&man, &pos, &vel, dt, &ProjectionOptions::default()).unwrap_err();
    assert!(matches!(err, Error::OffSurfaceSample { index: 7, .. }));
}

#[test]
fn constant_demonstration_fails_to_fit() {
    let mesh = flat(6);
    let man = MeshManifold::new(&mesh);
    let g = mesh.closest_point(&Vec3::new(0.1, 0.2, 0.0));
    let pos = vec![g.position; 30];
    let vel = vec![Vec3::zeros(); 30];
    let demo = project_demonstration(&man, &pos, &vel, 0.01, &ProjectionOptions::default()).unwrap();
    let err = fit(&man, &demo, &g, &FitParams::new(22.0, 20)).unwrap_err();
    assert!(matches!(err, Error::Fit { index: 0, .. }));
}

#[test]
fn start_at_goal_falls_back_to_unit_scale() {
    let mesh = flat(12);
    let man = MeshManifold::new(&mesh);
    let (pos, vel, dt) = circle(1.0, 1.0, 400, 0.0);
    let demo = project_demonstration(&man, &pos, &vel, dt, &ProjectionOptions::default()).unwrap();
    let model = fit(&man, &demo, &demo.samples[0].y, &FitParams::new(22.0, 20)).unwrap();
    assert_eq!(model.r, 1.0);
    assert!(model.metadata.r_fallback);
}

/// Rolls out a fitted model for three periods, feeds its last period back
/// in as a demonstration and checks the refit forcing.
#[test]
fn refit_recovers_forcing() {
    let mesh = flat(28);
    let man = MeshManifold::new(&mesh);
    let truth = fit_demo(&man, &eight_demo(GraphFn::Zero), Vec3::zeros(), 22.0).model;
    let dt = truth.metadata.dt;
    let n = truth.metadata.n_samples;
    let z0 = truth.initial_z(&man, &truth.start, &truth.goal).unwrap();
    let traj = rollout(&man, &truth, &truth.start, &z0.vec, 3.0 * n as f64 * dt, dt, None).unwrap();
    let last = &traj.rows[2 * n..];
    let pos: Vec<Vec3> = last.iter().map(|r| r.y.position).collect();
    let vel: Vec<Vec3> = last.iter().map(|r| r.z * truth.omega).collect();
    let demo = project_demonstration(&man, &pos, &vel, dt, &ProjectionOptions::default()).unwrap();
    let mut params = FitParams::new(22.0, 20);
    params.omega = Some(truth.omega);
    let refit = fit(&man, &demo, &truth.goal, &params).unwrap();
    let mut peak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let phi = k as f64 * dt / truth.omega;
        peak = peak.max(truth.forcing(phi).norm());
        worst = worst.max((truth.forcing(phi) - refit.forcing(phi)).norm());
    }
    assert!(worst <= 0.05 * peak, "worst {worst} peak {peak}");
}

#[test]
fn bump_surface_reproduction() {
    let mesh = bump_surface_mesh().unwrap();
    let man = MeshManifold::new(&mesh);
    let f = fit_demo(&man, &eight_demo(GraphFn::Bumps), GraphFn::Bumps.lift(0.0, 0.0), 22.0);
    let z0 = f.demo.samples[0].ydot / f.model.omega;
    let dt = 1e-3;
    let traj = rollout(&man, &f.model, &f.demo.samples[0].y, &z0, PERIOD, dt, None).unwrap();
    let stride = (f.demo.dt / dt).round() as usize;
    let got: Vec<Vec3> = traj.rows.iter().step_by(stride).map(|r| r.y.position).collect();
    assert!(rmse(&got, &f.demo.positions()) <= 0.1);
}

#[test]
fn rollout_stays_on_surface_and_tangent() {
    let mesh = bump_surface_mesh().unwrap();
    let man = MeshManifold::new(&mesh);
    let f = fit_demo(&man, &eight_demo(GraphFn::Bumps), GraphFn::Bumps.lift(0.0, 0.0), 22.0);
    let z0 = f.demo.samples[0].ydot / f.model.omega;
    let traj = rollout(&man, &f.model, &f.demo.samples[0].y, &z0, PERIOD, 2e-3, None).unwrap();
    for r in &traj.rows {
        mesh.check_point(&r.y).unwrap();
        let n = mesh.normal(r.y.face);
        assert!(r.z.dot(&n).abs() <= 1e-9 * r.z.norm().max(1.0));
    }
}

#[test]
fn zero_forcing_converges_to_goal() {
    let mesh = flat(10);
    let man = MeshManifold::new(&mesh);
    let g = mesh.closest_point(&Vec3::new(0.2, -0.1, 0.0));
    let y0 = mesh.closest_point(&Vec3::new(-0.1, 0.3, 0.0));
    let model = MeshDmpModel::unfitted(22.0, 5.5, 1.0, 20, g, y0);
    let traj = rollout(&man, &model, &y0, &Vec3::zeros(), 2.0, 1e-4, None).unwrap();
    let x0 = (y0.position - g.position).norm();
    let lambda = 0.5 * model.alpha * model.omega;
    for r in traj.rows.iter().step_by(500) {
        let exact = x0 * (1.0 + lambda * r.t) * (-lambda * r.t).exp();
        let got = (r.y.position - g.position).norm();
        assert!((got - exact).abs() <= 1e-4, "t {} got {got} exact {exact}", r.t);
    }
}

#[test]
fn empty_schedule_matches_fixed_centre() {
    let mesh = flat(20);
    let man = MeshManifold::new(&mesh);
    let f = fit_demo(&man, &eight_demo(GraphFn::Zero), Vec3::zeros(), 22.0);
    let z0 = f.demo.samples[0].ydot / f.model.omega;
    let start = f.demo.samples[0].y;
    let a = rollout(&man, &f.model, &start, &z0, 0.5, 1e-3, None).unwrap();
    let b = rollout(&man, &f.model, &start, &z0, 0.5, 1e-3, Some(&CenterSchedule::default())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn moving_centre_rebuilds_solver() {
    let mesh = flat(20);
    let man = MeshManifold::new(&mesh);
    let f = fit_demo(&man, &eight_demo(GraphFn::Zero), Vec3::zeros(), 22.0);
    let z0 = f.demo.samples[0].ydot / f.model.omega;
    let entries = (0..5)
        .map(|i| (0.2 * i as f64, mesh.closest_point(&Vec3::new(0.05 * i as f64, 0.0, 0.0))))
        .collect();
    let schedule = CenterSchedule::new(entries).unwrap();
    let out = rollout_partial(&man, &f.model, &f.demo.samples[0].y, &z0, 1.0, 1e-3, Some(&schedule)).unwrap();
    assert!(out.error.is_none());
    assert_eq!(out.trajectory.len(), 1000);
    assert_eq!(out.rebuilds, 4);
}

#[test]
fn leaving_the_surface_keeps_partial_rows() {
    let mesh = generate_graph_mesh(GraphFn::Zero, [0.0, 1.0, 0.0, 1.0], (5, 5)).unwrap();
    let man = MeshManifold::new(&mesh);
    let g = mesh.closest_point(&Vec3::new(0.5, 0.5, 0.0));
    let model = MeshDmpModel::unfitted(22.0, 5.5, 1.0, 5, g, g);
    let out = rollout_partial(&man, &model, &g, &Vec3::new(50.0, 0.0, 0.0), 1.0, 1e-3, None).unwrap();
    assert!(matches!(out.error, Some(Error::GeodesicLeftSurface { .. })));
    assert!(!out.trajectory.is_empty() && out.trajectory.len() < 1000);
}

#[test]
fn initial_velocity_helper_replays_demo() {
    let mesh = flat(20);
    let man = MeshManifold::new(&mesh);
    let f = fit_demo(&man, &eight_demo(GraphFn::Zero), Vec3::zeros(), 22.0);
    let z0 = f.model.initial_z(&man, &f.demo.samples[0].y, &f.goal).unwrap();
    let expected = f.demo.samples[0].ydot / f.model.omega;
    assert!((z0.vec - expected).norm() < 1e-9 * expected.norm());
}

#[test]
fn frames_filter_bounds_rotation_across_a_crease() {
    // two planes meeting at x = 0 with a 60° dihedral angle
    let theta = PI / 3.0;
    let verts = vec![
        Vec3::new(-1.0, 0.0, 0.0),
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(-1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(theta.cos(), 0.0, theta.sin()),
        Vec3::new(theta.cos(), 1.0, theta.sin()),
    ];
    let faces = vec![[0, 1, 3], [0, 3, 2], [1, 4, 5], [1, 5, 3]];
    let mesh = Mesh::new(verts, faces).unwrap();
    let dt = 0.01;
    let rows: Vec<TrajectoryRow> = (0..60)
        .map(|i| {
            let s = -0.5 + i as f64 / 60.0;
            let p = if s < 0.0 {
                Vec3::new(s, 0.5, 0.0)
            } else {
                Vec3::new(s * theta.cos(), 0.5, s * theta.sin())
            };
            let y = mesh.closest_point(&p);
            TrajectoryRow {
                t: i as f64 * dt,
                y,
                z: Vec3::zeros(),
                phi: 0.0,
            }
        })
        .collect();
    let traj = Trajectory { dt, rows };
    let raw = frames_along(&mesh, &traj, 0.0);
    let jump = raw
        .poses
        .windows(2)
        .map(|w| w[0].orientation.angle_to(&w[1].orientation))
        .fold(0.0, f64::max);
    assert!((jump - theta).abs() < 1e-9, "jump {jump}");
    let tau = 0.1;
    let filtered = frames_along(&mesh, &traj, tau);
    for w in filtered.poses.windows(2) {
        assert!(w[0].orientation.angle_to(&w[1].orientation) <= dt / tau * theta + 1e-12);
    }
    // 30 filtered steps after the crease leave e^{-3} of the jump
    let left = filtered.poses.last().unwrap().orientation.angle_to(&raw.poses.last().unwrap().orientation);
    assert!(left < 0.06 * theta, "{left}");
}
