use nalgebra::DMatrix;

use super::{Instanton, DETECTION_RADIUS};
use crate::error::{Error, Result};
use crate::flow::RestPoint;
use crate::ode::{dopri5, Control, OdeOptions};
use crate::system::FieldSystem;

const SEGMENT: f64 = 0.5;
const MAX_CONDITION: f64 = 1e6;

/// Orthonormalizes the columns of `f` keeping their orientation (positive R diagonal).
fn orthonormalize(f: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = f.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols() {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Carries a frame along the flow with the variational equation, renormalizing
/// every `SEGMENT` time units, until `stop(lift)` holds or `t_max` elapses.
pub(crate) fn transport<S>(sys: &FieldSystem, start: &[f64], frame: &DMatrix<f64>, t_max: f64, mut stop: S) -> Result<(Vec<f64>, DMatrix<f64>)>
where
    S: FnMut(&[f64]) -> bool,
{
    let n = sys.dim();
    let m = frame.ncols();
    let mut pos = start.to_vec();
    let mut f = orthonormalize(frame);
    let mut elapsed = 0.0;
    let opts = OdeOptions::with_tol(sys.tolerances.ode);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (x, j) = sys.field_and_jacobian(&y[..n])?;
        dy[..n].copy_from_slice(&x);
        for c in 0..m {
            for i in 0..n {
                dy[n + c * n + i] = (0..n).map(|k| j[(i, k)] * y[n + c * n + k]).sum();
            }
        }
        Ok(())
    };
    while elapsed < t_max {
        let mut y0 = pos.clone();
        y0.extend(f.iter().copied());
        let seg = SEGMENT.min(t_max - elapsed);
        let out = dopri5(rhs, 0.0, &y0, seg, &opts, |_, y| if stop(&y[..n]) { Control::Stop } else { Control::Continue })?;
        elapsed += out.t;
        pos = out.y[..n].to_vec();
        f = orthonormalize(&DMatrix::from_column_slice(n, m, &out.y[n..]));
        if out.stopped {
            break;
        }
    }
    Ok((pos, f))
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// ε^{o_from,o_to} of an instanton, using the orientations stored on the rest points.
///
/// The oriented frame of W⁻_from is carried to the point m where ∫ω reaches half
/// its total; there X̂(m) is split off as first vector and the oriented complement
/// C is carried on to the end of the path and compared with the oriented frame
/// of W⁻_to. For `to` a minimum the sign is that of X̂(m) in the 1-frame.
pub fn instanton_sign(sys: &FieldSystem, rest_points: &[RestPoint], inst: &Instanton) -> Result<i32> {
    let (x, y) = (&rest_points[inst.from], &rest_points[inst.to]);
    let origin = &x.position;
    let target: Vec<f64> = y.position.iter().zip(&inst.winding.0).map(|(p, w)| p + *w as f64).collect();
    let seed = &inst.path.lifts[1];
    let duration = inst.path.times.last().unwrap() - inst.path.times[1] + 1.0;
    let half = 0.5 * inst.omega_value;
    let (m, e) = transport(sys, seed, &x.oriented_unstable(), duration, |l| {
        sys.omega
            .integral_between_lifts(origin, l)
            .map(|w| w.abs() >= half.abs())
            .unwrap_or(true)
    })?;
    let xm = nalgebra::DVector::from_vec(sys.field_at(&m)?).normalize();
    let coords = e.transpose() * &xm;
    if coords.norm() < 0.9 {
        return Err(Error::IllConditionedFrame { condition: 1.0 / coords.norm().max(1e-300) });
    }
    let k = e.ncols() - 1;
    if k == 0 {
        return Ok(if coords[0] > 0.0 { 1 } else { -1 });
    }
    // oriented complement of X̂(m) inside span(E), in E-coordinates
    let full = DMatrix::from_fn(k + 1, k + 1, |r, c| if c == 0 { coords[r] } else if r == c - 1 { 1.0 } else { 0.0 });
    let mut q = full.qr().q();
    if q.column(0).dot(&coords) < 0.0 {
        q.column_mut(0).neg_mut();
    }
    let mut comp = q.columns(1, k).into_owned();
    let mut test = DMatrix::zeros(k + 1, k + 1);
    test.set_column(0, &coords);
    for c in 0..k {
        test.set_column(c + 1, &comp.column(c));
    }
    if test.determinant() < 0.0 {
        comp.column_mut(0).neg_mut();
    }
    let c_frame = &e * comp;
    let (_, c_end) = transport(sys, &m, &c_frame, duration, |l| {
        let d: f64 = l.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        d < DETECTION_RADIUS
    })?;
    let proj = y.oriented_unstable().transpose() * c_end;
    let cond = condition(&proj);
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditionedFrame { condition: cond });
    }
    Ok(if proj.determinant() > 0.0 { 1 } else { -1 })
}
