use rayon::prelude::*;
use serde::Serialize;

use super::RestPoint;
use crate::error::Result;
use crate::system::{grid_points, FieldSystem};

pub const DEFAULT_LYAPUNOV_GRID: usize = 128;
const SIGN_TOL: f64 = 1e-10;
const MAX_VIOLATIONS: usize = 32;

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub is_lyapunov: bool,
    /// max ω(X) over the grid (≤ 0 for a Lyapunov form).
    pub max_omega_x: f64,
    /// Largest c with ω(X) ≤ −c·dist(p, 𝒳)² on the grid (−min ω(X) when 𝒳 is empty).
    pub fitted_c: f64,
    pub violations: Vec<Vec<f64>>,
    pub grid: usize,
}

/// Samples ω(X) on a uniform grid. A point violates the Lyapunov condition when
/// ω(X) > tol, or when ω(X) ≥ −tol although X is visibly nonzero there.
pub fn check_lyapunov(sys: &FieldSystem, rest_points: &[RestPoint], grid: usize) -> Result<LyapunovReport> {
    let pts = grid_points(sys.dim(), grid);
    let samples = pts
        .par_iter()
        .map(|p| {
            let x = sys.field_at(p)?;
            let w = sys.omega.apply(p, &x)?;
            Ok((w, x.iter().map(|v| v * v).sum::<f64>().sqrt()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut max_w = f64::NEG_INFINITY;
    let mut c = f64::INFINITY;
    let mut violations = Vec::new();
    for (p, &(w, xn)) in pts.iter().zip(&samples) {
        max_w = max_w.max(w);
        if w > SIGN_TOL || (w >= -SIGN_TOL && xn > 1e-4) {
            if violations.len() < MAX_VIOLATIONS {
                violations.push(p.clone());
            }
        }
        let d2 = rest_points
            .iter()
            .map(|r| sys.domain.distance(p, &r.position).powi(2))
            .fold(f64::INFINITY, f64::min);
        if d2.is_infinite() {
            c = c.min(-w);
        } else if d2 > 1e-6 {
            c = c.min(-w / d2);
        }
    }
    let is_lyapunov = violations.is_empty();
    Ok(LyapunovReport {
        is_lyapunov,
        max_omega_x: max_w,
        fitted_c: c,
        violations,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::find_rest_points;

    fn sys(text: &str) -> FieldSystem {
        FieldSystem::from_str_named("t", text).unwrap()
    }

    #[test]
    fn gradient_field_is_lyapunov() {
        let s = sys("dim = 2\nfield.1 = 2*pi*sinp(x1)\nfield.2 = 2*pi*sinp(x2)\nomega.potential = cosp(x1) + cosp(x2)\n");
        let rp = find_rest_points(&s).unwrap();
        let r = check_lyapunov(&s, &rp, 64).unwrap();
        assert!(r.is_lyapunov);
        assert!(r.max_omega_x.abs() < 1e-12);
        assert!(r.fitted_c > 0.0);
    }

    #[test]
    fn constant_flow_sign() {
        let bad = sys("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = 1, 0\n");
        assert!(!check_lyapunov(&bad, &[], 16).unwrap().is_lyapunov);
        let good = sys("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = -1, 0\n");
        let r = check_lyapunov(&good, &[], 16).unwrap();
        assert!(r.is_lyapunov && (r.fitted_c - 1.0).abs() < 1e-12);
    }
}
