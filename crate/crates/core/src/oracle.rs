//! Smooth parametric surfaces with their metric, Christoffel symbols and
//! geodesic ODE. Used as an independent reference for the mesh operators.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::surface::GraphFn;

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// `Γ[i][j][k] = Γ^i_{jk}`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    /// `(u, v, 0)`.
    Plane,
    /// Polar angle `θ` and azimuth `ϕ`.
    Sphere { radius: f64 },
    /// `((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`.
    Torus { major: f64, minor: f64 },
    /// `(x, y, f(x, y))`.
    Graph(GraphFn),
}

/// A regular parameterisation `φ(u₁, u₂)` on a box `[a₁,b₁] × [a₂,b₂]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricSurface {
    pub kind: SurfaceKind,
    pub domain: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricData {
    pub g: Mat2,
    pub g_inv: Mat2,
}

impl ParametricSurface {
    pub fn plane(domain: [f64; 4]) -> Self {
        ParametricSurface {
            kind: SurfaceKind::Plane,
            domain,
        }
    }

    pub fn sphere(radius: f64) -> Self {
        ParametricSurface {
            kind: SurfaceKind::Sphere { radius },
            domain: [0.0, std::f64::consts::PI, -4.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI],
        }
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        let w = 4.0 * std::f64::consts::PI;
        ParametricSurface {
            kind: SurfaceKind::Torus { major, minor },
            domain: [-w, w, -w, w],
        }
    }

    pub fn graph(fun: GraphFn, domain: [f64; 4]) -> Self {
        ParametricSurface {
            kind: SurfaceKind::Graph(fun),
            domain,
        }
    }

    /// Finite-difference step for metric derivatives.
    pub fn diff_step(&self) -> f64 {
        let [a1, b1, a2, b2] = self.domain;
        1e-5 * (b1 - a1).min(b2 - a2)
    }

    pub fn contains(&self, u: &Vec2) -> bool {
        let [a1, b1, a2, b2] = self.domain;
        let tol = 1e-9 * (b1 - a1).max(b2 - a2);
        u.x >= a1 - tol && u.x <= b1 + tol && u.y >= a2 - tol && u.y <= b2 + tol
    }

    pub fn point(&self, u: &Vec2) -> Vec3 {
        let (a, b) = (u.x, u.y);
        match self.kind {
            SurfaceKind::Plane => Vec3::new(a, b, 0.0),
            SurfaceKind::Sphere { radius } => {
                Vec3::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos()) * radius
            }
            SurfaceKind::Torus { major, minor } => {
                let w = major + minor * b.cos();
                Vec3::new(w * a.cos(), w * a.sin(), minor * b.sin())
            }
            SurfaceKind::Graph(f) => f.lift(a, b),
        }
    }

    /// `(∂₁φ, ∂₂φ)`.
    pub fn partials(&self, u: &Vec2) -> (Vec3, Vec3) {
        let (a, b) = (u.x, u.y);
        match self.kind {
            SurfaceKind::Plane => (Vec3::x(), Vec3::y()),
            SurfaceKind::Sphere { radius } => (
                Vec3::new(a.cos() * b.cos(), a.cos() * b.sin(), -a.sin()) * radius,
                Vec3::new(-a.sin() * b.sin(), a.sin() * b.cos(), 0.0) * radius,
            ),
            SurfaceKind::Torus { major, minor } => {
                let w = major + minor * b.cos();
                (
                    Vec3::new(-w * a.sin(), w * a.cos(), 0.0),
                    Vec3::new(-minor * b.sin() * a.cos(), -minor * b.sin() * a.sin(), minor * b.cos()),
                )
            }
            SurfaceKind::Graph(f) => {
                let (fx, fy) = f.gradient(a, b);
                (Vec3::new(1.0, 0.0, fx), Vec3::new(0.0, 1.0, fy))
            }
        }
    }

    /// `g_ij = ⟨∂_i, ∂_j⟩` without the singularity check.
    fn metric_matrix(&self, u: &Vec2) -> Mat2 {
        let (d1, d2) = self.partials(u);
        let g12 = d1.dot(&d2);
        Mat2::new(d1.dot(&d1), g12, g12, d2.dot(&d2))
    }

    /// `∂_l g_ij` by central differences, indexed `[l]`.
    fn metric_derivatives(&self, u: &Vec2) -> [Mat2; 2] {
        let h = self.diff_step();
        let d = |e: Vec2| (self.metric_matrix(&(u + e * h)) - self.metric_matrix(&(u - e * h))) / (2.0 * h);
        [d(Vec2::x()), d(Vec2::y())]
    }

    /// Unit-speed tangent in parameter space for a direction `du`.
    pub fn normalize_velocity(&self, u: &Vec2, du: &Vec2) -> Result<Vec2> {
        let m = metric(self, u)?;
        let speed2 = du.dot(&(m.g * du));
        if !(speed2 > 0.0) {
            return Err(Error::InvalidInput("initial direction has zero length".into()));
        }
        Ok(du / speed2.sqrt())
    }

    /// `ü = −Γ(u̇, u̇)`. Solves `G a = −b` with a pseudo-inverse so that
    /// stage points on a coordinate singularity (the sphere's poles) stay
    /// finite when the velocity has no component along the collapsed
    /// direction.
    fn acceleration(&self, u: &Vec2, du: &Vec2) -> Vec2 {
        let g = self.metric_matrix(u);
        let dg = self.metric_derivatives(u);
        let mut b = Vec2::zeros();
        for l in 0..2 {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    s += (dg[j][(l, k)] - 0.5 * dg[l][(j, k)]) * du[j] * du[k];
                }
            }
            b[l] = s;
        }
        let eig = SymmetricEigen::new(g);
        let top = eig.eigenvalues.abs().max();
        let mut out = Vec2::zeros();
        for i in 0..2 {
            let lam = eig.eigenvalues[i];
            if lam.abs() > 1e-14 * top {
                let v = eig.eigenvectors.column(i);
                out -= v * (v.dot(&b) / lam);
            }
        }
        out
    }
}

/// Metric tensor and its inverse at `u`.
pub fn metric(surface: &ParametricSurface, u: &Vec2) -> Result<MetricData> {
    let g = surface.metric_matrix(u);
    let det = g.determinant();
    let scale = g.trace().powi(2);
    if !(det > 1e-14 * scale) || !det.is_finite() {
        return Err(Error::SingularMetric { u: u.x, v: u.y });
    }
    let g_inv = g.try_inverse().ok_or(Error::SingularMetric { u: u.x, v: u.y })?;
    Ok(MetricData { g, g_inv })
}

/// `Γ^i_{jk} = ½ g^{il} (∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})`.
pub fn christoffel(surface: &ParametricSurface, u: &Vec2) -> Result<Christoffel> {
    let m = metric(surface, u)?;
    let h = surface.diff_step();
    for e in [Vec2::x(), Vec2::y()] {
        metric(surface, &(u + e * h))?;
        metric(surface, &(u - e * h))?;
    }
    let dg = surface.metric_derivatives(u);
    let mut out = [[[0.0; 2]; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, col) in row.iter_mut().enumerate() {
            for (k, val) in col.iter_mut().enumerate() {
                *val = (0..2)
                    .map(|l| 0.5 * m.g_inv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]))
                    .sum();
            }
        }
    }
    Ok(out)
}

/// A geodesic in both parameter and embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurve {
    pub params: Vec<Vec2>,
    pub points: Vec<Vec3>,
    /// Metric speed `g(u̇, u̇)` at every sample; 1 at the start.
    pub speed2: Vec<f64>,
}

impl GeodesicCurve {
    pub fn end(&self) -> Vec3 {
        *self.points.last().expect("curve has a start")
    }

    /// Largest `|g(u̇,u̇) − 1|`.
    pub fn speed_drift(&self) -> f64 {
        self.speed2.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Solves `ü_i + Γ^i_{jk} u̇_j u̇_k = 0` with classical RK4 for arc length
/// `length`, starting at `u0` in direction `du0` (rescaled to unit speed).
pub fn shoot_geodesic(
    surface: &ParametricSurface,
    u0: &Vec2,
    du0: &Vec2,
    length: f64,
    steps: usize,
) -> Result<GeodesicCurve> {
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::InvalidInput(format!("length must be non-negative, got {length}")));
    }
    if (steps as f64) < 1000.0 * length || steps == 0 {
        return Err(Error::InvalidInput(format!(
            "{steps} steps is below 1000 per unit length for length {length}"
        )));
    }
    if !surface.contains(u0) {
        return Err(Error::OutOfDomain { u: u0.x, v: u0.y });
    }
    let mut u = *u0;
    let mut du = surface.normalize_velocity(u0, du0)?;
    let h = length / steps as f64;
    let speed = |u: &Vec2, du: &Vec2| du.dot(&(surface.metric_matrix(u) * du));
    let mut curve = GeodesicCurve {
        params: vec![u],
        points: vec![surface.point(&u)],
        speed2: vec![speed(&u, &du)],
    };
    let f = |u: &Vec2, du: &Vec2| (*du, surface.acceleration(u, du));
    for _ in 0..steps {
        let (k1u, k1v) = f(&u, &du);
        let (k2u, k2v) = f(&(u + k1u * (h / 2.0)), &(du + k1v * (h / 2.0)));
        let (k3u, k3v) = f(&(u + k2u * (h / 2.0)), &(du + k2v * (h / 2.0)));
        let (k4u, k4v) = f(&(u + k3u * h), &(du + k3v * h));
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
        du += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        if !surface.contains(&u) || !u.iter().all(|x| x.is_finite()) {
            return Err(Error::OutOfDomain { u: u.x, v: u.y });
        }
        curve.params.push(u);
        curve.points.push(surface.point(&u));
        curve.speed2.push(speed(&u, &du));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn plane_metric_and_symbols() {
        let s = ParametricSurface::plane([-1.0, 1.0, -1.0, 1.0]);
        let u = Vec2::new(0.2, -0.3);
        let m = metric(&s, &u).unwrap();
        assert_eq!(m.g, Mat2::identity());
        let g = christoffel(&s, &u).unwrap();
        assert!(g.iter().flatten().flatten().all(|x| *x == 0.0));
        let c = shoot_geodesic(&s, &u, &Vec2::new(3.0, 4.0), 0.5, 500).unwrap();
        assert_relative_eq!(c.end(), Vec3::new(0.5, 0.1, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn sphere_textbook_values() {
        let s = ParametricSurface::sphere(1.0);
        let u = Vec2::new(0.7, 1.3);
        let m = metric(&s, &u).unwrap();
        assert_relative_eq!(m.g, Mat2::new(1.0, 0.0, 0.0, 0.7f64.sin().powi(2)), epsilon = 1e-12);
        assert_relative_eq!(m.g * m.g_inv, Mat2::identity(), epsilon = 1e-9);
        let g = christoffel(&s, &u).unwrap();
        assert_relative_eq!(g[0][1][1], -0.7f64.sin() * 0.7f64.cos(), epsilon = 1e-6);
        assert_relative_eq!(g[1][0][1], 1.0 / 0.7f64.tan(), epsilon = 1e-6);
        assert_relative_eq!(g[1][1][0], g[1][0][1], epsilon = 1e-7);
        assert!(matches!(metric(&s, &Vec2::new(0.0, 0.3)), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn graph_metric_expansion() {
        let s = ParametricSurface::graph(GraphFn::Bumps, [-2.0, 2.0, -2.0, 2.0]);
        let u = Vec2::new(0.4, 0.9);
        let (fx, fy) = GraphFn::Bumps.gradient(u.x, u.y);
        let m = metric(&s, &u).unwrap();
        let want = Mat2::new(1.0 + fx * fx, fx * fy, fx * fy, 1.0 + fy * fy);
        assert_relative_eq!(m.g, want, epsilon = 1e-12);
    }

    #[test]
    fn equator_to_pole() {
        let s = ParametricSurface::sphere(1.0);
        let c = shoot_geodesic(&s, &Vec2::new(FRAC_PI_2, 0.4), &Vec2::new(-1.0, 0.0), FRAC_PI_2, 2000).unwrap();
        assert!((c.end() - Vec3::z()).norm() < 1e-6);
        assert!(c.speed_drift() < 1e-6);
    }

    #[test]
    fn sphere_great_circle_and_speed() {
        let s = ParametricSurface::sphere(2.0);
        let u0 = Vec2::new(1.1, 0.2);
        let c = shoot_geodesic(&s, &u0, &Vec2::new(0.3, 0.8), 2.0, 4000).unwrap();
        assert!(c.speed_drift() < 1e-6);
        // every point stays on the plane through the centre spanned by the start
        let p0 = s.point(&u0);
        let (d1, d2) = s.partials(&u0);
        let dir = d1 * 0.3 + d2 * 0.8;
        let n = p0.cross(&dir).normalize();
        for p in &c.points {
            assert!(p.dot(&n).abs() < 1e-8);
        }
        // arc length on a radius-2 sphere is 2θ
        assert_relative_eq!(p0.angle(&c.end()), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn torus_speed_is_conserved() {
        let s = ParametricSurface::torus(2.0, 0.8);
        let c = shoot_geodesic(&s, &Vec2::new(0.1, 0.5), &Vec2::new(0.4, 1.0), 3.0, 6000).unwrap();
        assert!(c.speed_drift() < 1e-6);
    }

    #[test]
    fn leaving_the_domain_is_an_error() {
        let s = ParametricSurface::plane([-1.0, 1.0, -1.0, 1.0]);
        let err = shoot_geodesic(&s, &Vec2::zeros(), &Vec2::x(), 2.0, 2000).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }));
        assert!(shoot_geodesic(&s, &Vec2::zeros(), &Vec2::x(), 0.5, 100).is_err());
    }
}
