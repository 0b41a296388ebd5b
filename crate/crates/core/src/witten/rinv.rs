use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::system::FieldSystem;
use crate::torus::ClosedOneForm;

const REST_GRID: usize = 256;
const REST_TOL: f64 = 1e-6;

/// ℛ = (1/2π) ∫_{T²} ω ∧ dθ_X with θ_X = atan2(X₂, X₁), for a rest-point-free
/// field, by the midpoint rule on an N_q × N_q grid. dθ_X is evaluated from the
/// field's exact derivatives, (X₁dX₂ − X₂dX₁)/|X|².
pub fn r_invariant(sys: &FieldSystem, omega: &ClosedOneForm, nq: usize) -> Result<f64> {
    if sys.dim() != 2 || omega.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: sys.dim() });
    }
    if nq == 0 {
        return Err(Error::InvalidParameter("quadrature size must be positive".into()));
    }
    let worst = (0..REST_GRID * REST_GRID)
        .into_par_iter()
        .map(|k| {
            let p = [(k % REST_GRID) as f64 / REST_GRID as f64, (k / REST_GRID) as f64 / REST_GRID as f64];
            let x = sys.field_at(&p)?;
            Ok((x[0].hypot(x[1]), p))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    if worst.0 <= REST_TOL {
        return Err(Error::HasRestPoint(worst.1.to_vec()));
    }
    let h = 1.0 / nq as f64;
    let rows = (0..nq)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in 0..nq {
                let p = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                let (x, jac) = sys.field_and_jacobian(&p)?;
                let n2 = x[0] * x[0] + x[1] * x[1];
                let dtheta = [(x[0] * jac[(1, 0)] - x[1] * jac[(0, 0)]) / n2, (x[0] * jac[(1, 1)] - x[1] * jac[(0, 1)]) / n2];
                let w = omega.at(&p)?;
                s += w[0] * dtheta[1] - w[1] * dtheta[0];
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.iter().sum::<f64>() * h * h / TAU)
}
