use serde::Serialize;

use super::{sphere_seeds, RestPoint};
use crate::error::{Error, Result};
use crate::ode::{dopri5, Control, OdeOptions};
use crate::system::FieldSystem;

const SEED_RADIUS: f64 = 1e-3;
const STOP_RADIUS: f64 = 1e-3;
const RADII: usize = 24;

#[derive(Debug, Clone, Serialize)]
pub struct GrowthEstimate {
    pub rest_point: Vec<f64>,
    pub dimension: usize,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub fitted_c: f64,
    pub intercept: f64,
    pub eg_pass: bool,
    /// Some ray ran out of time before reaching r_max or a rest point.
    pub partial: bool,
}

/// Cumulative volume of one ray's sector as a function of intrinsic distance.
struct RayProfile {
    dist: Vec<f64>,
    vol: Vec<f64>,
    finished: bool,
}

impl RayProfile {
    fn at(&self, r: f64) -> f64 {
        match self.dist.iter().position(|&d| d > r) {
            None => *self.vol.last().unwrap(),
            Some(0) => 0.0,
            Some(i) => {
                let (d0, d1) = (self.dist[i - 1], self.dist[i]);
                let s = (r - d0) / (d1 - d0);
                self.vol[i - 1] + s * (self.vol[i] - self.vol[i - 1])
            }
        }
    }
}

/// Volume of the intrinsic r-ball in W⁻_x, from rays seeded on the unstable
/// δ-sphere and carried with their variational tangents.
pub fn estimate_growth(
    sys: &FieldSystem,
    x: &RestPoint,
    rest_points: &[RestPoint],
    r_max: f64,
    rays: usize,
    time_budget: f64,
) -> Result<GrowthEstimate> {
    if !x.hyperbolic {
        return Err(Error::NonHyperbolic(0));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidParameter("r_max must be positive".into()));
    }
    let k = x.morse_index;
    let radii: Vec<f64> = (1..=RADII).map(|j| r_max * j as f64 / RADII as f64).collect();
    if k == 0 {
        return Ok(GrowthEstimate {
            rest_point: x.position.clone(),
            dimension: 0,
            volumes: vec![0.0; radii.len()],
            radii,
            fitted_c: 0.0,
            intercept: f64::NEG_INFINITY,
            eg_pass: true,
            partial: false,
        });
    }
    let seeds = sphere_seeds(k, rays);
    let mut profiles = Vec::with_capacity(seeds.len());
    for (u, w) in &seeds {
        profiles.push((ray_profile(sys, x, rest_points, u, time_budget)?, *w));
    }
    let ball = match k {
        1 => 2.0 * SEED_RADIUS,
        2 => std::f64::consts::PI * SEED_RADIUS.powi(2),
        _ => 4.0 / 3.0 * std::f64::consts::PI * SEED_RADIUS.powi(3),
    };
    let volumes: Vec<f64> = radii
        .iter()
        .map(|&r| {
            if r <= SEED_RADIUS {
                return ball * (r / SEED_RADIUS).powi(k as i32);
            }
            ball + profiles.iter().map(|(p, w)| w * p.at(r - SEED_RADIUS)).sum::<f64>()
        })
        .collect();
    let partial = profiles
        .iter()
        .any(|(p, _)| !p.finished && *p.dist.last().unwrap() + SEED_RADIUS < r_max);
    let half = radii.len() / 2;
    let (c, b, resid) = fit_line(&radii[half..], &volumes[half..].iter().map(|v| v.ln()).collect::<Vec<_>>());
    Ok(GrowthEstimate {
        rest_point: x.position.clone(),
        dimension: k,
        radii,
        volumes,
        fitted_c: c,
        intercept: b,
        eg_pass: c.is_finite() && resid <= 1.0,
        partial,
    })
}

/// Least squares y ≈ c·x + b; returns (c, b, max |residual|).
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let c = sxy / sxx;
    let b = my - c * mx;
    let r = x.iter().zip(y).map(|(a, v)| (v - c * a - b).abs()).fold(0.0, f64::max);
    (c, b, r)
}

/// Unit tangents to S^{k−1} at `u` (k ≤ 3), expressed in frame coordinates.
fn sphere_tangents(u: &[f64]) -> Vec<Vec<f64>> {
    match u.len() {
        1 => Vec::new(),
        2 => vec![vec![-u[1], u[0]]],
        _ => {
            let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let (c, s) = if rho > 0.0 { (u[0] / rho, u[1] / rho) } else { (1.0, 0.0) };
            vec![vec![c * u[2], s * u[2], -rho], vec![-s, c, 0.0]]
        }
    }
}

fn ray_profile(sys: &FieldSystem, x: &RestPoint, rest_points: &[RestPoint], u: &[f64], t_max: f64) -> Result<RayProfile> {
    let n = sys.dim();
    let frame = &x.unstable_frame;
    let embed = |c: &[f64]| -> Vec<f64> { (0..n).map(|i| c.iter().zip(frame).map(|(a, f)| a * f[i]).sum()).collect() };
    let dir = embed(u);
    let tangents: Vec<Vec<f64>> = sphere_tangents(u).iter().map(|t| embed(t)).collect();
    let m = tangents.len();
    // state: position, tangents (each scaled by δ), arclength
    let mut y0: Vec<f64> = x.position.iter().zip(&dir).map(|(p, d)| p + SEED_RADIUS * d).collect();
    for t in &tangents {
        y0.extend(t.iter().map(|v| SEED_RADIUS * v));
    }
    y0.push(0.0);
    let density = |y: &[f64]| -> Result<(Vec<f64>, f64)> {
        let (xv, _) = sys.field_and_jacobian(&y[..n])?;
        let mut cols: Vec<&[f64]> = (0..m).map(|j| &y[n + j * n..n + (j + 1) * n]).collect();
        cols.push(&xv);
        let g = nalgebra::DMatrix::from_fn(m + 1, m + 1, |a, b| cols[a].iter().zip(cols[b]).map(|(p, q)| p * q).sum::<f64>());
        Ok((xv.clone(), g.determinant().max(0.0).sqrt()))
    };
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (xv, j) = sys.field_and_jacobian(&y[..n])?;
        dy[..n].copy_from_slice(&xv);
        for t in 0..m {
            for i in 0..n {
                dy[n + t * n + i] = (0..n).map(|c| j[(i, c)] * y[n + t * n + c]).sum();
            }
        }
        dy[n + m * n] = xv.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(())
    };
    let own = x.position.clone();
    let mut prof = RayProfile { dist: vec![0.0], vol: vec![0.0], finished: false };
    let mut last = (0.0, density(&y0)?.1);
    let mut failure = None;
    let mut left = false;
    let opts = OdeOptions::with_tol(1e-9);
    dopri5(rhs, 0.0, &y0, t_max, &opts, |t, y| {
        let d = match density(y) {
            Ok(v) => v.1,
            Err(e) => {
                failure = Some(e);
                return Control::Stop;
            }
        };
        let v = prof.vol.last().unwrap() + 0.5 * (d + last.1) * (t - last.0);
        last = (t, d);
        prof.dist.push(y[n + m * n]);
        prof.vol.push(v);
        let p: Vec<f64> = y[..n].to_vec();
        if !left && sys.domain.distance(&p, &own) > 2.0 * SEED_RADIUS {
            left = true;
        }
        let near = rest_points.iter().any(|r| {
            let is_own = sys.domain.distance(&r.position, &own) < 1e-9;
            (!is_own || left) && sys.domain.distance(&p, &r.position) < STOP_RADIUS
        });
        if near {
            prof.finished = true;
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{find_rest_points, integrate};

    fn gradient() -> FieldSystem {
        FieldSystem::from_str_named(
            "g",
            "dim = 2\nfield.1 = 2*pi*sinp(x1)\nfield.2 = 2*pi*sinp(x2)\nomega.potential = cosp(x1) + cosp(x2)\n",
        )
        .unwrap()
    }

    #[test]
    fn saddle_growth_is_arclength() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let g = estimate_growth(&sys, &rp[1], &rp, 2.0, 8, 40.0).unwrap();
        // oracle: polyline length of the two rays, each stopped near the minimum
        let mut total = 2.0 * SEED_RADIUS;
        for s in [1.0, -1.0] {
            let v: Vec<f64> = rp[1].unstable_frame[0].iter().map(|c| s * c).collect();
            let seed: Vec<f64> = rp[1].position.iter().zip(&v).map(|(p, d)| p + SEED_RADIUS * d).collect();
            let tr = integrate(&sys, &seed, 40.0, 1.0).unwrap();
            let mut len = 0.0;
            for w in tr.lifts.windows(2) {
                len += ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
                let p: Vec<f64> = w[1].iter().map(|&c| crate::torus::reduce_coord(c)).collect();
                if sys.domain.distance(&p, &rp[0].position) < STOP_RADIUS {
                    break;
                }
            }
            total += len;
        }
        let v = *g.volumes.last().unwrap();
        assert!((v - total).abs() < 1e-3, "{v} vs {total}");
        assert!(g.eg_pass && g.fitted_c.abs() < 1e-6);
        assert!(g.volumes.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn minimum_has_zero_volume() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let g = estimate_growth(&sys, &rp[0], &rp, 1.0, 8, 10.0).unwrap();
        assert!(g.eg_pass && g.volumes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn maximum_area_is_bounded_by_torus_area() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let g = estimate_growth(&sys, &rp[3], &rp, 2.0, 192, 30.0).unwrap();
        // oracle: W⁻ of the maximum is the torus minus the lower strata, area 1
        let v = *g.volumes.last().unwrap();
        assert!((v - 1.0).abs() < 0.02, "{v}");
        assert!(g.eg_pass && g.fitted_c < 0.5);
    }
}
