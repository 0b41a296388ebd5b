//! Flow integration on the torus, rest points and invariant manifolds.

mod growth;
mod lyapunov;
mod manifold;
mod rest;

pub use growth::{estimate_growth, GrowthEstimate};
pub use lyapunov::{check_lyapunov, LyapunovReport, DEFAULT_LYAPUNOV_GRID};
pub use manifold::{seed_invariant_manifold, sphere_seeds, InvariantManifoldPatch, ManifoldRay, Side};
pub use rest::{classify_rest_point, find_rest_points, find_rest_points_with, RestPoint, DEFAULT_SEED_GRID};

use serde::Serialize;

use crate::error::Result;
use crate::ode::{dopri5, Control, OdeOptions, OdeOutcome};
use crate::system::FieldSystem;
use crate::torus::reduce_coord;

/// A sampled trajectory. Lifts live in ℝⁿ and start at the reduced initial point.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub lifts: Vec<Vec<f64>>,
    /// Accumulated ∫ω from the start to each sample.
    pub omega: Vec<f64>,
}

impl Trajectory {
    pub fn endpoint(&self) -> &[f64] {
        self.points.last().unwrap()
    }

    pub fn end_lift(&self) -> &[f64] {
        self.lifts.last().unwrap()
    }

    pub fn omega_total(&self) -> f64 {
        *self.omega.last().unwrap()
    }
}

/// Right-hand side dir·X in lifted coordinates.
pub fn flow_rhs(sys: &FieldSystem, dir: f64) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    move |_, y, dy| {
        sys.field_into(y, dy)?;
        if dir < 0.0 {
            dy.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(())
    }
}

pub fn ode_options(sys: &FieldSystem) -> OdeOptions {
    OdeOptions::with_tol(sys.tolerances.ode)
}

/// Flows the lift `start` for flow time up to `t_max` (backward when dir < 0),
/// calling `observe(τ, lift)` after each accepted step.
pub fn flow_lift<O>(sys: &FieldSystem, start: &[f64], t_max: f64, dir: f64, observe: O) -> Result<OdeOutcome>
where
    O: FnMut(f64, &[f64]) -> Control,
{
    dopri5(flow_rhs(sys, dir), 0.0, start, t_max, &ode_options(sys), observe)
}

/// Integrates from `p` for time `t` in direction `dir` (±1) and samples every accepted step.
pub fn integrate(sys: &FieldSystem, p: &[f64], t: f64, dir: f64) -> Result<Trajectory> {
    let start: Vec<f64> = p.iter().map(|&x| reduce_coord(x)).collect();
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![start.clone()],
        lifts: vec![start.clone()],
        omega: vec![0.0],
    };
    let mut failure = None;
    flow_lift(sys, &start, t, dir, |tau, y| {
        match sys.omega.integral_between_lifts(&start, y) {
            Ok(w) => {
                traj.times.push(dir.signum() * tau);
                traj.points.push(y.iter().map(|&x| reduce_coord(x)).collect());
                traj.lifts.push(y.to_vec());
                traj.omega.push(w);
                Control::Continue
            }
            Err(e) => {
                failure = Some(e);
                Control::Stop
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(text: &str) -> FieldSystem {
        FieldSystem::from_str_named("t", text).unwrap()
    }

    #[test]
    fn constant_field_endpoint_and_lift() {
        let sys = system("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = 1, 0\n");
        let tr = integrate(&sys, &[0.0, 0.0], 2.5, 1.0).unwrap();
        assert!((tr.endpoint()[0] - 0.5).abs() < 1e-12 && tr.endpoint()[1].abs() < 1e-12);
        assert!((tr.end_lift()[0] - 2.5).abs() < 1e-12);
        assert!((tr.omega_total() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_flow_reaches_minimum() {
        let sys = system("dim = 2\nfield.1 = 2*pi*sinp(x1)\nfield.2 = 2*pi*sinp(x2)\nomega.potential = cosp(x1) + cosp(x2)\n");
        let tr = integrate(&sys, &[0.25, 0.25], 20.0, 1.0).unwrap();
        // oracle: explicit gradient descent on cos(2πx)+cos(2πy)
        let (mut x, mut y) = (0.25f64, 0.25f64);
        for _ in 0..200_000 {
            let tau = std::f64::consts::TAU;
            x += 1e-4 * tau * (tau * x).sin();
            y += 1e-4 * tau * (tau * y).sin();
        }
        assert!((tr.endpoint()[0] - x).abs() < 1e-6 && (tr.endpoint()[1] - y).abs() < 1e-6);
        assert!((x - 0.5).abs() < 1e-6);
    }

    #[test]
    fn time_reversal_returns() {
        let sys = system("dim = 2\nfield.1 = 1 + 0.3*sinp(x2)\nfield.2 = sinp(x1) + 0.2\n");
        let p = [0.1, 0.7];
        let fwd = integrate(&sys, &p, 3.0, 1.0).unwrap();
        let back = integrate(&sys, fwd.endpoint(), 3.0, -1.0).unwrap();
        assert!(sys.domain.distance(back.endpoint(), &p) < 1e-9);
    }

    #[test]
    fn lift_is_additive() {
        let sys = system("dim = 2\nfield.1 = 1 + 0.3*sinp(x2)\nfield.2 = sinp(x1) + 0.2\n");
        let whole = integrate(&sys, &[0.3, 0.4], 4.0, 1.0).unwrap();
        let a = integrate(&sys, &[0.3, 0.4], 1.5, 1.0).unwrap();
        let b = integrate(&sys, a.endpoint(), 2.5, 1.0).unwrap();
        for i in 0..2 {
            let da = a.end_lift()[i] - a.lifts[0][i];
            let db = b.end_lift()[i] - b.lifts[0][i];
            let dw = whole.end_lift()[i] - whole.lifts[0][i];
            assert!((da + db - dw).abs() < 1e-8);
        }
    }
}
