//! Dormand–Prince 5(4) with PI-free standard step control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> OdeOptions {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..OdeOptions::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: 1e-3,
            h_max: 0.1,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    /// True when the observer stopped the run before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates y' = f(t, y) from `t0` toward `t_end` (either direction).
/// `observe` is called after every accepted step and may stop the run.
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions, mut observe: O) -> Result<OdeOutcome>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Control,
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1)?;
    let mut h = opts.h_init.min(opts.h_max).min((t_end - t0).abs().max(f64::MIN_POSITIVE));
    let mut steps = 0;
    while dir * (t_end - t) > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { time: t, state: y });
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;
        macro_rules! stage {
            ($out:expr, $c:expr, $($a:expr, $k:expr),+) => {{
                for i in 0..n {
                    tmp[i] = y[i] + hs * (0.0 $(+ $a * $k[i])+);
                }
                f(t + $c * hs, &tmp, &mut $out)?;
            }};
        }
        stage!(k2, C2, A21, k1);
        stage!(k3, C3, A31, k1, A32, k2);
        stage!(k4, C4, A41, k1, A42, k2, A43, k3);
        stage!(k5, C5, A51, k1, A52, k2, A53, k3, A54, k4);
        stage!(k6, 1.0, A61, k1, A62, k2, A63, k3, A64, k4, A65, k5);
        for i in 0..n {
            ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + hs, &ynew, &mut k7)?;
        let mut err = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
        } else if err <= 1.0 {
            t = if last { t_end } else { t + hs };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            steps += 1;
            if observe(t, &y) == Control::Stop {
                return Ok(OdeOutcome { t, y, steps, stopped: true });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { time: t, state: y });
        }
    }
    Ok(OdeOutcome { t, y, steps, stopped: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = OdeOptions::with_tol(1e-12);
        let out = dopri5(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            3.0,
            &opts,
            |_, _| Control::Continue,
        )
        .unwrap();
        assert!((out.y[0] - (-3.0f64).exp()).abs() < 1e-11);
        assert_eq!(out.t, 3.0);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let opts = OdeOptions::with_tol(1e-11);
        let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let fwd = dopri5(rhs, 0.0, &[1.0, 0.0], 10.0, &opts, |_, _| Control::Continue).unwrap();
        assert!((fwd.y[0] - 10f64.cos()).abs() < 1e-9);
        let back = dopri5(rhs, 10.0, &fwd.y, 0.0, &opts, |_, _| Control::Continue).unwrap();
        assert!((back.y[0] - 1.0).abs() < 1e-9 && back.y[1].abs() < 1e-9);
    }

    #[test]
    fn observer_stops_early() {
        let out = dopri5(
            |_, _, dy| {
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            100.0,
            &OdeOptions::default(),
            |_, y| if y[0] > 1.0 { Control::Stop } else { Control::Continue },
        )
        .unwrap();
        assert!(out.stopped && out.y[0] > 1.0 && out.y[0] < 1.2);
    }
}
