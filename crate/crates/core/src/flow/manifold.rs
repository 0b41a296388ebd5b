use serde::Serialize;

use super::{flow_lift, RestPoint, Trajectory};
use crate::error::{Error, Result};
use crate::ode::Control;
use crate::system::FieldSystem;
use crate::torus::reduce_coord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldRay {
    /// Unit direction in ℝⁿ the seed was placed along.
    pub direction: Vec<f64>,
    /// Samples from the rest point itself, then the seed, then the flow.
    pub path: Trajectory,
    /// Index into the supplied rest-point list of the point the ray ended near.
    pub end_rest_point: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantManifoldPatch {
    pub rest_point: Vec<f64>,
    pub side: Side,
    pub radius: f64,
    pub rays: Vec<ManifoldRay>,
}

/// Unit vectors on the sphere S^{k−1} ⊂ ℝᵏ with quadrature weights:
/// ±1 for k = 1, `m` equally spaced angles for k = 2, a latitude grid for k = 3.
pub fn sphere_seeds(k: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    use std::f64::consts::{PI, TAU};
    match k {
        0 => Vec::new(),
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..m)
            .map(|i| {
                let a = TAU * i as f64 / m as f64;
                (vec![a.cos(), a.sin()], TAU / m as f64)
            })
            .collect(),
        _ => {
            let rows = (m / 2).max(2);
            let mut out = Vec::new();
            for r in 0..rows {
                let phi = PI * (r as f64 + 0.5) / rows as f64;
                let count = ((m as f64 * phi.sin()).round() as usize).max(3);
                for c in 0..count {
                    let th = TAU * c as f64 / count as f64;
                    let w = phi.sin() * (PI / rows as f64) * (TAU / count as f64);
                    out.push((vec![phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos()], w));
                }
            }
            out
        }
    }
}

/// Rays of W^∓_x seeded at radius δ and flowed until they come within δ of a
/// rest point other than their own start, or until `time_budget` runs out.
pub fn seed_invariant_manifold(
    sys: &FieldSystem,
    x: &RestPoint,
    rest_points: &[RestPoint],
    side: Side,
    delta: f64,
    time_budget: f64,
    rays: usize,
) -> Result<InvariantManifoldPatch> {
    if !x.hyperbolic {
        return Err(Error::NonHyperbolic(0));
    }
    let frame = match side {
        Side::Unstable => &x.unstable_frame,
        Side::Stable => &x.stable_frame,
    };
    let dir = if side == Side::Unstable { 1.0 } else { -1.0 };
    let n = sys.dim();
    let mut out = Vec::new();
    for (coeffs, _) in sphere_seeds(frame.len(), rays) {
        let direction: Vec<f64> = (0..n)
            .map(|i| coeffs.iter().zip(frame).map(|(c, f)| c * f[i]).sum())
            .collect();
        out.push(flow_ray(sys, x, rest_points, &direction, delta, time_budget, dir)?);
    }
    Ok(InvariantManifoldPatch {
        rest_point: x.position.clone(),
        side,
        radius: delta,
        rays: out,
    })
}

fn flow_ray(
    sys: &FieldSystem,
    x: &RestPoint,
    rest_points: &[RestPoint],
    direction: &[f64],
    delta: f64,
    time_budget: f64,
    dir: f64,
) -> Result<ManifoldRay> {
    let origin = &x.position;
    let seed: Vec<f64> = origin.iter().zip(direction).map(|(o, d)| o + delta * d).collect();
    let mut path = Trajectory {
        times: vec![0.0, 0.0],
        points: vec![origin.clone(), seed.iter().map(|&v| reduce_coord(v)).collect()],
        lifts: vec![origin.clone(), seed.clone()],
        omega: vec![0.0, sys.omega.integral_between_lifts(origin, &seed)?],
    };
    let mut left = false;
    let mut end = None;
    let mut failure = None;
    flow_lift(sys, &seed, time_budget, dir, |tau, y| {
        let reduced: Vec<f64> = y.iter().map(|&v| reduce_coord(v)).collect();
        match sys.omega.integral_between_lifts(origin, y) {
            Ok(w) => {
                path.times.push(dir * tau);
                path.points.push(reduced.clone());
                path.lifts.push(y.to_vec());
                path.omega.push(w);
            }
            Err(e) => {
                failure = Some(e);
                return Control::Stop;
            }
        }
        if !left && sys.domain.distance(&reduced, origin) > 2.0 * delta {
            left = true;
        }
        for (i, r) in rest_points.iter().enumerate() {
            let own = sys.domain.distance(&r.position, origin) < 1e-9;
            if (!own || left) && sys.domain.distance(&reduced, &r.position) < delta {
                end = Some(i);
                return Control::Stop;
            }
        }
        Control::Continue
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ManifoldRay {
        direction: direction.to_vec(),
        path,
        end_rest_point: end,
    })
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
    fn saddle_has_two_opposite_rays() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let patch = seed_invariant_manifold(&sys, &rp[1], &rp, Side::Unstable, 1e-3, 50.0, 8).unwrap();
        assert_eq!(patch.rays.len(), 2);
        let d: f64 = patch.rays[0].direction.iter().zip(&patch.rays[1].direction).map(|(a, b)| a * b).sum();
        assert!((d + 1.0).abs() < 1e-12);
        assert!(patch.rays.iter().all(|r| r.end_rest_point == Some(0)));
    }

    #[test]
    fn minimum_unstable_patch_is_the_point() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let patch = seed_invariant_manifold(&sys, &rp[0], &rp, Side::Unstable, 1e-3, 50.0, 8).unwrap();
        assert!(patch.rays.is_empty());
    }

    #[test]
    fn maximum_rays_reach_lower_rest_points() {
        let sys = gradient();
        let rp = find_rest_points(&sys).unwrap();
        let patch = seed_invariant_manifold(&sys, &rp[3], &rp, Side::Unstable, 1e-3, 50.0, 16).unwrap();
        for ray in &patch.rays {
            // oracle: plain long integration from the seed
            let seed = &ray.path.lifts[1];
            let end = integrate(&sys, seed, 50.0, 1.0).unwrap();
            let near = rp.iter().any(|r| r.morse_index <= 1 && sys.domain.distance(end.endpoint(), &r.position) < 1e-3);
            assert!(near);
            assert!(ray.end_rest_point.is_some_and(|i| rp[i].morse_index <= 1));
        }
    }
}
