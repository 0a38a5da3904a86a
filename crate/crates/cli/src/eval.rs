//! Position RMSE between a demonstration period and a trajectory.

use meshdmp_core::io::TimedPositions;
use meshdmp_core::surface::CartesianDemo;
use meshdmp_core::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub rmse: f64,
    /// Demonstration index matched to the first resampled trajectory point.
    pub shift: usize,
    /// Resampled points compared.
    pub samples: usize,
    /// The trajectory covered less than one period.
    pub partial: bool,
}

/// Linear interpolation of `traj` at time `t`. `None` outside its span.
fn sample(traj: &TimedPositions, t: f64) -> Option<Vec3> {
    let ts = &traj.t;
    let (first, last) = (*ts.first()?, *ts.last()?);
    let eps = 1e-9 * (1.0 + last.abs());
    if t < first - eps || t > last + eps {
        return None;
    }
    let i = ts.partition_point(|&x| x <= t);
    if i == 0 {
        return Some(traj.positions[0]);
    }
    if i >= ts.len() {
        return Some(traj.positions[ts.len() - 1]);
    }
    let (t0, t1) = (ts[i - 1], ts[i]);
    let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    Some(traj.positions[i - 1] * (1.0 - s) + traj.positions[i] * s)
}

/// Resamples the first period of `traj` at the demonstration timestamps
/// and compares sample by sample. When the trajectory is shorter than a
/// period the cyclic shift of the demonstration with the lowest error is
/// used instead.
pub fn period_rmse(demo: &CartesianDemo, traj: &TimedPositions) -> Option<EvalResult> {
    let t0 = *traj.t.first()?;
    let resampled: Vec<Vec3> = (0..demo.len())
        .map_while(|k| sample(traj, t0 + k as f64 * demo.dt))
        .collect();
    let m = resampled.len();
    if m == 0 {
        return None;
    }
    let n = demo.len();
    let err = |shift: usize| {
        let s: f64 = resampled
            .iter()
            .enumerate()
            .map(|(k, p)| (p - demo.positions[(k + shift) % n]).norm_squared())
            .sum();
        (s / m as f64).sqrt()
    };
    if m == n {
        return Some(EvalResult {
            rmse: err(0),
            shift: 0,
            samples: m,
            partial: false,
        });
    }
    let (shift, rmse) = (0..n)
        .map(|s| (s, err(s)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    Some(EvalResult {
        rmse,
        shift,
        samples: m,
        partial: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use meshdmp_core::surface::{generate_demo_curve, DemoCurve, GraphFn};

    fn demo() -> CartesianDemo {
        generate_demo_curve(DemoCurve::Circle { radius: 0.5 }, [0.0, 0.0], GraphFn::Zero, 100, 1.0).unwrap()
    }

    fn as_traj(d: &CartesianDemo, offset: Vec3, dt_scale: usize) -> TimedPositions {
        // a finer trajectory sampled from the analytic circle
        let n = d.len() * dt_scale;
        let dt = d.dt / dt_scale as f64;
        let mut out = TimedPositions::default();
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            out.t.push(k as f64 * dt);
            out.positions.push(Vec3::new(0.5 * a.cos(), 0.5 * a.sin(), 0.0) + offset);
        }
        out
    }

    #[test]
    fn identical_is_zero() {
        let d = demo();
        let r = period_rmse(&d, &as_traj(&d, Vec3::zeros(), 1)).unwrap();
        assert!(r.rmse < 1e-12 && !r.partial && r.samples == 100);
    }

    #[test]
    fn constant_offset() {
        let d = demo();
        let r = period_rmse(&d, &as_traj(&d, Vec3::new(0.0, 0.0, 0.1), 4)).unwrap();
        assert!((r.rmse - 0.1).abs() < 1e-12);
    }

    #[test]
    fn short_trajectory_uses_best_shift() {
        let d = demo();
        let full = as_traj(&d, Vec3::zeros(), 1);
        let cut = TimedPositions {
            t: full.t[..40].iter().map(|t| t - full.t[0]).collect(),
            positions: full.positions[25..65].to_vec(),
        };
        let r = period_rmse(&d, &cut).unwrap();
        assert!(r.partial);
        assert_eq!((r.shift, r.samples), (25, 40));
        assert!(r.rmse < 1e-12);
    }

    #[test]
    fn empty_trajectory() {
        assert!(period_rmse(&demo(), &TimedPositions::default()).is_none());
    }
}
