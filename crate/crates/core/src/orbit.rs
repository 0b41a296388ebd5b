//! Closed trajectories: detection by recurrence, Newton refinement, monodromy,
//! signs ε = sign det(P − I) and iterates.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use serde::Serialize;

use crate::error::Result;
use crate::flow::flow_lift;
use crate::ode::{dopri5, Control, OdeOptions};
use crate::system::{grid_points, FieldSystem};
use crate::torus::{pair_form_class, reduce_coord, HomotopyClass};

pub const DEFAULT_T_MAX: f64 = 200.0;
const TRANSIENT: f64 = 30.0;
const SCAN_WINDOW: f64 = 20.0;
const RETURN_RADIUS: f64 = 0.05;
const NEWTON_TOL: f64 = 1e-11;
const CIRCLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct ClosedOrbit {
    pub base: Vec<f64>,
    pub time_period: f64,
    pub winding: HomotopyClass,
    /// ξ(winding) for the cohomology class of ω.
    pub xi_value: f64,
    pub monodromy: Vec<Vec<f64>>,
    pub multipliers: Vec<[f64; 2]>,
    pub nondegenerate: bool,
    pub epsilon: i32,
    pub period: u32,
    /// Index of the primitive orbit in the returned list (itself when period = 1).
    pub primitive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppedBy {
    Cutoff,
    TimeLimit,
    Both,
    Nothing,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSearch {
    pub orbits: Vec<ClosedOrbit>,
    pub primitive_count: usize,
    /// Degenerate primitive orbits found but not counted.
    pub nct_failures: Vec<ClosedOrbit>,
    pub stopped_by: StoppedBy,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    pub cutoff: f64,
    pub t_max: f64,
    pub seed_grid: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { cutoff: 10.0, t_max: DEFAULT_T_MAX, seed_grid: 4 }
    }
}

/// Flows `q` for time `t` together with the variational matrix; returns the end lift and M.
pub fn flow_with_monodromy(sys: &FieldSystem, q: &[f64], t: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = sys.dim();
    let mut y0 = q.to_vec();
    y0.extend(DMatrix::<f64>::identity(n, n).iter().copied());
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (x, j) = sys.field_and_jacobian(&y[..n])?;
        dy[..n].copy_from_slice(&x);
        let v = DMatrix::from_column_slice(n, n, &y[n..]);
        let jv = j * v;
        dy[n..].copy_from_slice(jv.as_slice());
        Ok(())
    };
    let out = dopri5(rhs, 0.0, &y0, t, &OdeOptions::with_tol(1e-12), |_, _| Control::Continue)?;
    Ok((out.y[..n].to_vec(), DMatrix::from_column_slice(n, n, &out.y[n..])))
}

/// Orthonormal basis of ν⊥ as columns.
fn complement_basis(nu: &DVector<f64>) -> DMatrix<f64> {
    let n = nu.len();
    let m = DMatrix::from_fn(n, n + 1, |r, c| if c == 0 { nu[r] } else if r == c - 1 { 1.0 } else { 0.0 });
    let q = m.qr().q();
    q.columns(1, n - 1).into_owned()
}

/// Poincaré-map differential on the section through `q` normal to X(q):
/// P = Bᵀ(I − X νᵀ/(νᵀX)) M B.
pub fn section_monodromy(x: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.len();
    let nu = x.normalize();
    let b = complement_basis(&nu);
    let proj = DMatrix::identity(n, n) - x * nu.transpose() / nu.dot(x);
    b.transpose() * proj * m * &b
}

fn eigen_pairs(p: &DMatrix<f64>) -> Vec<[f64; 2]> {
    if p.nrows() == 0 {
        return Vec::new();
    }
    p.complex_eigenvalues().iter().map(|c| [c.re, c.im]).collect()
}

fn sign_det_minus_identity(p: &DMatrix<f64>) -> i32 {
    let k = p.nrows();
    let d = (p - DMatrix::identity(k, k)).determinant();
    if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 }
}

struct Refined {
    q: Vec<f64>,
    t: f64,
    winding: HomotopyClass,
    monodromy: DMatrix<f64>,
}

/// Newton on (q, T) for φ_T(q) = q + w with the phase condition ⟨q − q₀, ν⟩ = 0.
fn refine(sys: &FieldSystem, q0: &[f64], t0: f64, w: &HomotopyClass) -> Result<Option<Refined>> {
    let n = sys.dim();
    let nu = DVector::from_vec(sys.field_at(q0)?).normalize();
    let wf = w.as_f64();
    let mut q = q0.to_vec();
    let mut t = t0;
    for _ in 0..40 {
        let (end, m) = flow_with_monodromy(sys, &q, t)?;
        let xe = sys.field_at(&end)?;
        let mut f = DVector::zeros(n + 1);
        for i in 0..n {
            f[i] = end[i] - q[i] - wf[i];
            f[n] += (q[i] - q0[i]) * nu[i];
        }
        if f.norm() < NEWTON_TOL {
            let x = DVector::from_vec(sys.field_at(&q)?);
            return Ok(Some(Refined { q, t, winding: w.clone(), monodromy: section_monodromy(&x, &m) }));
        }
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, n)] = xe[i];
            jac[(n, i)] = nu[i];
        }
        let step = jac.svd(true, true).solve(&f, 1e-10).map_err(|e| crate::error::Error::Linalg(e.to_string()))?;
        if !step.iter().all(|s| s.is_finite()) || step.norm() > 0.25 {
            return Ok(None);
        }
        for i in 0..n {
            q[i] -= step[i];
        }
        t -= step[n];
        if t <= 0.0 {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Candidate (q₀, T, winding) from the first good near-return after a transient.
fn recurrence_candidate(sys: &FieldSystem, seed: &[f64], dir: f64, window: f64) -> Result<Option<(Vec<f64>, f64, HomotopyClass)>> {
    let after = flow_lift(sys, seed, TRANSIENT, dir, |_, _| Control::Continue)?;
    let q0: Vec<f64> = after.y.iter().map(|&c| reduce_coord(c)).collect();
    let x0 = sys.field_at(&q0)?;
    if x0.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6 {
        return Ok(None);
    }
    let mut samples: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    flow_lift(sys, &q0, window, dir, |t, y| {
        let p: Vec<f64> = y.iter().map(|&c| reduce_coord(c)).collect();
        samples.push((t, sys.domain.distance(&p, &q0), y.to_vec()));
        Control::Continue
    })?;
    for i in 1..samples.len().saturating_sub(1) {
        let (t, d, ref lift) = samples[i];
        let moved = samples[..i].iter().any(|s| s.1 > 2.0 * RETURN_RADIUS);
        if moved && d < RETURN_RADIUS && d <= samples[i - 1].1 && d <= samples[i + 1].1 {
            let disp: Vec<f64> = lift.iter().zip(&q0).map(|(l, q)| l - q).collect();
            // backward scans find the orbit with reversed time: same set, forward winding is −disp
            let w = if dir > 0.0 { HomotopyClass::from_displacement(&disp) } else { -&HomotopyClass::from_displacement(&disp) };
            return Ok(Some((q0, t, w)));
        }
    }
    Ok(None)
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = crate::torus::torus_displacement(a, p);
    let l2: f64 = ab.iter().map(|v| v * v).sum();
    let s = if l2 > 0.0 { (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / l2).clamp(0.0, 1.0) } else { 0.0 };
    ab.iter().zip(&ap).map(|(u, v)| (v - s * u).powi(2)).sum::<f64>().sqrt()
}

fn on_orbit(sys: &FieldSystem, orbit: &Refined, p: &[f64]) -> Result<bool> {
    let mut lifts = vec![orbit.q.clone()];
    flow_lift(sys, &orbit.q, orbit.t, 1.0, |_, y| {
        lifts.push(y.to_vec());
        Control::Continue
    })?;
    let near = lifts.windows(2).any(|w| point_segment_distance(p, &w[0], &w[1]) < 1e-5);
    Ok(near)
}

/// Smallest divisor k ≤ 6 with φ_{T/k}(q) ≡ q, refined at T/k.
fn primitive_of(sys: &FieldSystem, r: Refined) -> Result<Refined> {
    for k in (2..=6).rev() {
        if r.winding.0.iter().any(|w| w % k != 0) {
            continue;
        }
        let tk = r.t / k as f64;
        let out = flow_lift(sys, &r.q, tk, 1.0, |_, _| Control::Continue)?;
        let end: Vec<f64> = out.y.iter().map(|&c| reduce_coord(c)).collect();
        if sys.domain.distance(&end, &r.q) < 1e-6 {
            let w = HomotopyClass(r.winding.0.iter().map(|v| v / k).collect());
            if let Some(p) = refine(sys, &r.q, tk, &w)? {
                return primitive_of(sys, p);
            }
        }
    }
    Ok(r)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

pub fn find_closed_orbits(sys: &FieldSystem, opts: &OrbitOptions) -> Result<OrbitSearch> {
    let window = SCAN_WINDOW.min(opts.t_max);
    let mut primitives: Vec<Refined> = Vec::new();
    let mut warnings = Vec::new();
    for seed in grid_points(sys.dim(), opts.seed_grid) {
        for dir in [1.0, -1.0] {
            let Some((q0, t, w)) = recurrence_candidate(sys, &seed, dir, window)? else { continue };
            let Some(r) = refine(sys, &q0, t, &w)? else {
                warnings.push(format!("refinement did not converge near {q0:?} (T ≈ {t:.3})"));
                continue;
            };
            let r = primitive_of(sys, r)?;
            let mut known = false;
            for p in &primitives {
                if p.winding == r.winding && (p.t - r.t).abs() < 1e-6 && on_orbit(sys, p, &r.q)? {
                    known = true;
                    break;
                }
            }
            if !known {
                primitives.push(r);
            }
        }
    }
    primitives.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap()
            .then_with(|| a.winding.cmp(&b.winding))
            .then_with(|| a.q.partial_cmp(&b.q).unwrap())
    });
    let mut orbits = Vec::new();
    let mut nct = Vec::new();
    let mut hit_cutoff = false;
    let mut hit_time = false;
    for prim in &primitives {
        let xi0 = pair_form_class(&sys.omega, &prim.winding)?;
        let eig = eigen_pairs(&prim.monodromy);
        let degenerate = eig.iter().any(|e| ((e[0] * e[0] + e[1] * e[1]).sqrt() - 1.0).abs() <= CIRCLE_TOL);
        let make = |k: u32, m: &DMatrix<f64>, idx: usize| ClosedOrbit {
            base: prim.q.iter().map(|&c| reduce_coord(c)).collect(),
            time_period: prim.t * k as f64,
            winding: &prim.winding * k as i64,
            xi_value: xi0 * k as f64,
            monodromy: to_rows(m),
            multipliers: eigen_pairs(m),
            nondegenerate: !degenerate,
            epsilon: sign_det_minus_identity(m),
            period: k,
            primitive: idx,
        };
        if degenerate {
            nct.push(make(1, &prim.monodromy, nct.len()));
            continue;
        }
        let idx = orbits.len();
        let mut m = prim.monodromy.clone();
        let mut k = 1u32;
        loop {
            let over_r = (xi0 * k as f64).abs() > opts.cutoff;
            let over_t = prim.t * k as f64 > opts.t_max;
            if over_r || over_t {
                hit_cutoff |= over_r;
                hit_time |= over_t;
                break;
            }
            orbits.push(make(k, &m, idx));
            m = &m * &prim.monodromy;
            k += 1;
        }
    }
    let stopped_by = match (hit_cutoff, hit_time) {
        (true, true) => StoppedBy::Both,
        (true, false) => StoppedBy::Cutoff,
        (false, true) => StoppedBy::TimeLimit,
        (false, false) => StoppedBy::Nothing,
    };
    Ok(OrbitSearch { primitive_count: primitives.len() - nct.len(), orbits, nct_failures: nct, stopped_by, warnings })
}

/// 𝓩(γ) = Σ ε/p over counted orbits in class γ.
pub fn zeta_counting(orbits: &[ClosedOrbit], gamma: &HomotopyClass) -> Ratio<i64> {
    orbits
        .iter()
        .filter(|o| o.nondegenerate && &o.winding == gamma)
        .fold(Ratio::from_integer(0), |acc, o| acc + Ratio::new(o.epsilon as i64, o.period as i64))
}
