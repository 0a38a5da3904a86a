#![allow(dead_code)]

use meshdmp_core::dmp::{fit, project_demonstration, Demonstration, FitParams, MeshDmpModel, ProjectionOptions};
use meshdmp_core::manifold::MeshManifold;
use meshdmp_core::surface::{generate_demo_curve, CartesianDemo, DemoCurve, GraphFn};
use meshdmp_core::{SurfacePoint, Vec3};

pub const LEMNISCATE: DemoCurve = DemoCurve::Lemniscate { scale: 1.5 };
pub const PERIOD: f64 = 2.0;
pub const SAMPLES: usize = 1000;

pub fn eight_demo(surface: GraphFn) -> CartesianDemo {
    generate_demo_curve(LEMNISCATE, [0.0, 0.0], surface, SAMPLES, PERIOD).unwrap()
}

pub struct Fitted {
    pub demo: Demonstration,
    pub model: MeshDmpModel,
    pub goal: SurfacePoint,
}

pub fn fit_demo(man: &MeshManifold<'_>, cart: &CartesianDemo, goal: Vec3, alpha: f64) -> Fitted {
    let demo = project_demonstration(man, &cart.positions, &cart.velocities, cart.dt, &ProjectionOptions::default()).unwrap();
    let goal = man.mesh().closest_point(&goal);
    let model = fit(man, &demo, &goal, &FitParams::new(alpha, 20)).unwrap();
    Fitted { demo, model, goal }
}

pub fn rmse(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}
