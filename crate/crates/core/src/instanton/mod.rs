//! Heteroclinic connections (instantons) between rest points of adjacent index.

mod sign;

pub use sign::instanton_sign;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow_lift, RestPoint, Trajectory};
use crate::ode::Control;
use crate::system::FieldSystem;
use crate::torus::{reduce_coord, HomotopyClass};

pub const DETECTION_RADIUS: f64 = 1e-3;
const ARRIVAL_TOL: f64 = 1e-9;
const BISECTION_DEPTH: usize = 60;
const SHOOTING_OFFSET: f64 = 0.37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ForwardRays,
    BackwardRays,
    Shooting,
}

#[derive(Debug, Clone, Serialize)]
pub struct Instanton {
    pub from: usize,
    pub to: usize,
    /// Forward-oriented path; lifts start at the assigned lift of `from`.
    pub path: Trajectory,
    pub winding: HomotopyClass,
    pub omega_value: f64,
    pub sign: i32,
    /// Distance of the path end from `to`.
    pub arrival: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstantonSearch {
    pub strategy: Strategy,
    pub instantons: Vec<Instanton>,
    /// False when some ray exhausted its time budget without settling.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub cutoff: f64,
    pub time_budget: f64,
    pub shooting_seeds: usize,
    pub strategy: Option<Strategy>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            cutoff: f64::INFINITY,
            time_budget: 200.0,
            shooting_seeds: 64,
            strategy: None,
        }
    }
}

struct RayRun {
    times: Vec<f64>,
    lifts: Vec<Vec<f64>>,
    end: Option<usize>,
    /// (torus distance, sample index) of the closest approach to the watched point.
    closest: (f64, usize),
}

/// Flows `start` until it is within `ARRIVAL_TOL` of a terminal rest point.
fn run_ray(
    sys: &FieldSystem,
    start: &[f64],
    dir: f64,
    t_max: f64,
    rest_points: &[RestPoint],
    terminal: &[usize],
    watch: Option<&[f64]>,
) -> Result<RayRun> {
    let mut run = RayRun {
        times: vec![0.0],
        lifts: vec![start.to_vec()],
        end: None,
        closest: (f64::INFINITY, 0),
    };
    let mut reduced = vec![0.0; start.len()];
    flow_lift(sys, start, t_max, dir, |t, y| {
        run.times.push(t);
        run.lifts.push(y.to_vec());
        for (r, v) in reduced.iter_mut().zip(y) {
            *r = reduce_coord(*v);
        }
        if let Some(w) = watch {
            let d = sys.domain.distance(&reduced, w);
            if d < run.closest.0 {
                run.closest = (d, run.lifts.len() - 1);
            }
        }
        for &i in terminal {
            if sys.domain.distance(&reduced, &rest_points[i].position) < ARRIVAL_TOL {
                run.end = Some(i);
                return Control::Stop;
            }
        }
        Control::Continue
    })?;
    Ok(run)
}

fn winding_to(end_lift: &[f64], target: &[f64]) -> HomotopyClass {
    let d: Vec<f64> = end_lift.iter().zip(target).map(|(e, t)| e - t).collect();
    HomotopyClass::from_displacement(&d)
}

fn trajectory(sys: &FieldSystem, origin: &[f64], times: Vec<f64>, lifts: Vec<Vec<f64>>) -> Result<Trajectory> {
    let omega = lifts
        .iter()
        .map(|l| sys.omega.integral_between_lifts(origin, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        points: lifts.iter().map(|l| l.iter().map(|&v| reduce_coord(v)).collect()).collect(),
        lifts,
        omega,
    })
}

/// All instantons from `rest_points[from]` to `rest_points[to]` with |ω-value| ≤ cutoff.
pub fn find_instantons(
    sys: &FieldSystem,
    rest_points: &[RestPoint],
    from: usize,
    to: usize,
    opts: &SearchOptions,
) -> Result<InstantonSearch> {
    let (x, y) = (&rest_points[from], &rest_points[to]);
    if !x.hyperbolic {
        return Err(Error::NonHyperbolic(from));
    }
    if !y.hyperbolic {
        return Err(Error::NonHyperbolic(to));
    }
    if x.morse_index != y.morse_index + 1 {
        return Err(Error::NonAdjacent { from: x.morse_index, to: y.morse_index });
    }
    let n = sys.dim();
    let strategy = opts.strategy.unwrap_or(if x.morse_index == 1 {
        Strategy::ForwardRays
    } else if n - y.morse_index == 1 {
        Strategy::BackwardRays
    } else {
        Strategy::Shooting
    });
    let (raw, complete) = match strategy {
        Strategy::ForwardRays => forward_rays(sys, rest_points, from, to, opts)?,
        Strategy::BackwardRays => backward_rays(sys, rest_points, from, to, opts)?,
        Strategy::Shooting => shooting(sys, rest_points, from, to, opts)?,
    };
    let mut instantons: Vec<Instanton> = Vec::new();
    for (path, arrival) in raw {
        let winding = winding_to(path.end_lift(), &y.position);
        let target: Vec<f64> = y.position.iter().zip(&winding.0).map(|(p, w)| p + *w as f64).collect();
        let omega_value = sys.omega.integral_between_lifts(&x.position, &target)?;
        if omega_value.abs() > opts.cutoff {
            continue;
        }
        let dup = instantons.iter().any(|o| o.winding == winding && same_approach(sys, &o.path, &path, &target));
        if dup {
            continue;
        }
        let mut inst = Instanton { from, to, path, winding, omega_value, sign: 0, arrival };
        inst.sign = instanton_sign(sys, rest_points, &inst)?;
        instantons.push(inst);
    }
    instantons.sort_by(|a, b| {
        b.omega_value
            .partial_cmp(&a.omega_value)
            .unwrap()
            .then_with(|| a.winding.cmp(&b.winding))
            .then(a.sign.cmp(&b.sign))
    });
    Ok(InstantonSearch { strategy, instantons, complete })
}

fn same_approach(sys: &FieldSystem, a: &Trajectory, b: &Trajectory, target: &[f64]) -> bool {
    let dir = |t: &Trajectory| -> Vec<f64> {
        // direction from the target to the last sample more than 10δ away
        let far = t
            .lifts
            .iter()
            .rev()
            .find(|l| sys.domain.distance(&l.iter().map(|&v| reduce_coord(v)).collect::<Vec<_>>(), &target.iter().map(|&v| reduce_coord(v)).collect::<Vec<_>>()) > 10.0 * DETECTION_RADIUS)
            .unwrap_or(&t.lifts[0]);
        let d: Vec<f64> = far.iter().zip(target).map(|(f, g)| f - g).collect();
        let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter().map(|v| v / nrm).collect()
    };
    let (da, db) = (dir(a), dir(b));
    da.iter().zip(&db).map(|(p, q)| p * q).sum::<f64>() > 0.999
}

fn seed_along(origin: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    origin.iter().zip(v).map(|(o, d)| o + s * DETECTION_RADIUS * d).collect()
}

fn prepend_origin(origin: &[f64], run: RayRun) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut times = vec![0.0];
    times.extend(run.times);
    let mut lifts = vec![origin.to_vec()];
    lifts.extend(run.lifts);
    (times, lifts)
}

type Raw = (Vec<(Trajectory, f64)>, bool);

fn forward_rays(sys: &FieldSystem, rp: &[RestPoint], from: usize, to: usize, opts: &SearchOptions) -> Result<Raw> {
    let x = &rp[from];
    let terminal: Vec<usize> = (0..rp.len()).filter(|&i| rp[i].morse_index < x.morse_index).collect();
    let mut out = Vec::new();
    let mut complete = true;
    let v = &x.unstable_frame[0];
    for s in [1.0, -1.0] {
        let run = run_ray(sys, &seed_along(&x.position, v, s), 1.0, opts.time_budget, rp, &terminal, None)?;
        match run.end {
            None => complete = false,
            Some(e) if e == to => {
                let (times, lifts) = prepend_origin(&x.position, run);
                let end = lifts.last().unwrap().iter().map(|&c| reduce_coord(c)).collect::<Vec<_>>();
                let arrival = sys.domain.distance(&end, &rp[to].position);
                out.push((trajectory(sys, &x.position, times, lifts)?, arrival));
            }
            Some(_) => {}
        }
    }
    Ok((out, complete))
}

fn backward_rays(sys: &FieldSystem, rp: &[RestPoint], from: usize, to: usize, opts: &SearchOptions) -> Result<Raw> {
    let (x, y) = (&rp[from], &rp[to]);
    let terminal: Vec<usize> = (0..rp.len()).filter(|&i| rp[i].morse_index > y.morse_index).collect();
    let mut out = Vec::new();
    let mut complete = true;
    let v = &y.stable_frame[0];
    for s in [1.0, -1.0] {
        let run = run_ray(sys, &seed_along(&y.position, v, s), -1.0, opts.time_budget, rp, &terminal, None)?;
        match run.end {
            None => complete = false,
            Some(e) if e == from => {
                // reverse, then shift so the path starts at the assigned lift of `from`
                let total = *run.times.last().unwrap();
                let mut lifts: Vec<Vec<f64>> = run.lifts.into_iter().rev().collect();
                lifts.push(y.position.clone());
                let mut times: Vec<f64> = run.times.iter().rev().map(|t| total - t).collect();
                times.push(*times.last().unwrap());
                let start = &lifts[0];
                let shift: Vec<f64> = start.iter().zip(&x.position).map(|(s, p)| (p - s).round()).collect();
                let arrival = sys.domain.distance(&start.iter().map(|&c| reduce_coord(c)).collect::<Vec<_>>(), &x.position);
                for l in lifts.iter_mut() {
                    l.iter_mut().zip(&shift).for_each(|(c, s)| *c += s);
                }
                lifts.insert(0, x.position.clone());
                times.insert(0, 0.0);
                out.push((trajectory(sys, &x.position, times, lifts)?, arrival));
            }
            Some(_) => {}
        }
    }
    Ok((out, complete))
}

#[derive(Debug, Clone, PartialEq)]
enum Label {
    Settled(usize, HomotopyClass),
    Unsettled,
}

fn shooting(sys: &FieldSystem, rp: &[RestPoint], from: usize, to: usize, opts: &SearchOptions) -> Result<Raw> {
    let (x, y) = (&rp[from], &rp[to]);
    if x.unstable_frame.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "angular shooting needs a 2-dimensional unstable manifold, found {}",
            x.unstable_frame.len()
        )));
    }
    let terminal: Vec<usize> = (0..rp.len()).filter(|&i| rp[i].morse_index < y.morse_index).collect();
    let (u1, u2) = (&x.unstable_frame[0], &x.unstable_frame[1]);
    let shoot = |theta: f64| -> Result<(Label, RayRun)> {
        let v: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect();
        let run = run_ray(sys, &seed_along(&x.position, &v, 1.0), 1.0, opts.time_budget, rp, &terminal, Some(&y.position))?;
        let label = match run.end {
            Some(e) => Label::Settled(e, winding_to(run.lifts.last().unwrap(), &rp[e].position)),
            None => Label::Unsettled,
        };
        Ok((label, run))
    };
    let m = opts.shooting_seeds;
    let tau = std::f64::consts::TAU;
    let angles: Vec<f64> = (0..m).map(|i| tau * (i as f64 + SHOOTING_OFFSET) / m as f64).collect();
    let labels = angles.iter().map(|&a| shoot(a).map(|r| r.0)).collect::<Result<Vec<_>>>()?;
    let complete = labels.iter().all(|l| *l != Label::Unsettled);
    let mut out = Vec::new();
    for i in 0..m {
        let j = (i + 1) % m;
        if labels[i] == labels[j] || labels[i] == Label::Unsettled || labels[j] == Label::Unsettled {
            continue;
        }
        let (mut lo, mut hi) = (angles[i], if j == 0 { angles[0] + tau } else { angles[j] });
        let lo_label = labels[i].clone();
        let mut best: Option<RayRun> = None;
        for _ in 0..BISECTION_DEPTH {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (label, run) = shoot(mid)?;
            if best.as_ref().is_none_or(|b| run.closest.0 < b.closest.0) {
                best = Some(run);
            }
            if label == lo_label {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let Some(run) = best else { continue };
        if run.closest.0 > 10.0 * DETECTION_RADIUS {
            continue;
        }
        let cut = run.closest.1;
        let arrival = run.closest.0;
        let mut times = run.times;
        let mut lifts = run.lifts;
        times.truncate(cut + 1);
        lifts.truncate(cut + 1);
        let (times, lifts) = prepend_origin(&x.position, RayRun { times, lifts, end: None, closest: (0.0, 0) });
        out.push((trajectory(sys, &x.position, times, lifts)?, arrival));
    }
    Ok((out, complete))
}
