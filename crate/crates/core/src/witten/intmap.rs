use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::dec::{DiscreteDeRham, WittenOperator};
use super::split::SpectralSplit;
use crate::error::{Error, Result};
use crate::flow::{flow_rhs, RestPoint};
use crate::novikov::NovikovComplex;
use crate::ode::{dopri5, Control, OdeOptions};
use crate::system::FieldSystem;

/// Initial offset of unstable rays from their rest point.
pub const RAY_OFFSET: f64 = 1e-7;
/// Rays stop this close to a sink, or once t·h_x < −TAIL_EXPONENT.
pub const SINK_RADIUS: f64 = 1e-9;
const TAIL_EXPONENT: f64 = 36.0;
const RAY_TIME: f64 = 200.0;
const BASIN_TIME: f64 = 60.0;
const BASIN_RADIUS: f64 = 1e-2;
const BASIN_TOL: f64 = 1e-6;
const MAX_REFINE: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct RayRecord {
    /// +1 along the oriented unstable direction, −1 against it.
    pub side: i32,
    pub end: Vec<f64>,
    pub h_end: f64,
    pub steps: usize,
    /// max |h(τ) − ∫ω from the rest point to the ray point| along the ray.
    pub h_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchRecord {
    pub rest_point: usize,
    pub index: usize,
    pub rays: Vec<RayRecord>,
    /// Quadrature nodes used for a 2-dimensional patch.
    pub nodes: usize,
    /// Nodes whose backward orbit reached no source.
    pub unlabeled: usize,
}

/// Int^k as n_k × (small dimension) matrices, rows in rest-point order per index.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrationMap {
    pub t: f64,
    pub grid: usize,
    #[serde(serialize_with = "super::serialize_matrices")]
    pub matrices: Vec<DMatrix<f64>>,
    pub patches: Vec<PatchRecord>,
}

fn ray_integral(
    sys: &FieldSystem,
    dec: &DiscreteDeRham,
    rest_points: &[RestPoint],
    x: usize,
    side: i32,
    cochains: &[Vec<f64>],
    t: f64,
) -> Result<(Vec<f64>, RayRecord)> {
    let rp = &rest_points[x];
    let u = rp.oriented_unstable();
    let start: Vec<f64> = (0..2).map(|i| rp.position[i] + side as f64 * RAY_OFFSET * u[(i, 0)]).collect();
    let m = cochains.len();
    let mut y0 = start.clone();
    y0.push(sys.omega.integral_between_lifts(&rp.position, &start)?);
    y0.extend(std::iter::repeat_n(0.0, m));
    let field = flow_rhs(sys, 1.0);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        field(0.0, &y[..2], &mut dy[..2])?;
        let v = [dy[0], dy[1]];
        dy[2] = sys.omega.apply(&y[..2], &v)?;
        let w = (t * y[2]).exp();
        for (j, c) in cochains.iter().enumerate() {
            let a = dec.whitney1(c, &y[..2]);
            dy[3 + j] = w * (a[0] * v[0] + a[1] * v[1]);
        }
        Ok(())
    };
    let sinks: Vec<&RestPoint> = rest_points.iter().filter(|r| r.morse_index == 0).collect();
    let mut defect: f64 = 0.0;
    let mut failure = None;
    let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..OdeOptions::default() };
    let out = dopri5(rhs, 0.0, &y0, RAY_TIME, &opts, |_, y| {
        match sys.omega.integral_between_lifts(&rp.position, &y[..2]) {
            Ok(h) => defect = defect.max((h - y[2]).abs()),
            Err(e) => {
                failure = Some(e);
                return Control::Stop;
            }
        }
        let near = sinks.iter().any(|s| crate::torus::torus_displacement(&s.position, &y[..2]).iter().map(|d| d * d).sum::<f64>().sqrt() < SINK_RADIUS);
        if near || t * y[2] < -TAIL_EXPONENT {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if !out.stopped {
        return Err(Error::QuadratureTail { tail: (t * out.y[2]).exp(), radius: RAY_TIME });
    }
    let record = RayRecord { side, end: out.y[..2].to_vec(), h_end: out.y[2], steps: out.steps, h_defect: defect };
    Ok((out.y[3..].iter().map(|v| side as f64 * v).collect(), record))
}

/// Source reached by the backward orbit of p, with the lift of that source.
fn basin_label(sys: &FieldSystem, sources: &[(usize, Vec<f64>)], p: &[f64]) -> Option<(usize, [i64; 2])> {
    let mut hit = None;
    let opts = OdeOptions::with_tol(BASIN_TOL);
    dopri5(flow_rhs(sys, -1.0), 0.0, p, BASIN_TIME, &opts, |_, y| {
        for (s, pos) in sources {
            let k = [(y[0] - pos[0]).round(), (y[1] - pos[1]).round()];
            let d = ((y[0] - pos[0] - k[0]).powi(2) + (y[1] - pos[1] - k[1]).powi(2)).sqrt();
            if d < BASIN_RADIUS {
                hit = Some((*s, [k[0] as i64, k[1] as i64]));
                return Control::Stop;
            }
        }
        Control::Continue
    })
    .ok()?;
    hit
}

struct Basin<'a> {
    sys: &'a FieldSystem,
    sources: Vec<(usize, Vec<f64>)>,
    t: f64,
}

impl Basin<'_> {
    /// ∫ e^{t h_x} over the square with corner c and side s, per source, by
    /// quadrant midpoints refined where labels disagree.
    fn square(&self, c: [f64; 2], s: f64, depth: usize, acc: &mut Vec<(usize, f64)>, nodes: &mut usize, unlabeled: &mut usize) {
        let q = 0.5 * s;
        let mids: Vec<[f64; 2]> = [[0.5, 0.5], [1.5, 0.5], [0.5, 1.5], [1.5, 1.5]].iter().map(|o| [c[0] + o[0] * q, c[1] + o[1] * q]).collect();
        let labels: Vec<_> = mids.iter().map(|m| basin_label(self.sys, &self.sources, m)).collect();
        *nodes += 4;
        if depth < MAX_REFINE && labels.windows(2).any(|w| w[0] != w[1]) {
            for o in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                self.square([c[0] + o[0] * q, c[1] + o[1] * q], q, depth + 1, acc, nodes, unlabeled);
            }
            return;
        }
        for (m, l) in mids.iter().zip(labels) {
            let Some((src, k)) = l else {
                *unlabeled += 1;
                continue;
            };
            let pos = &self.sources.iter().find(|s| s.0 == src).unwrap().1;
            let lift = [pos[0] + k[0] as f64, pos[1] + k[1] as f64];
            let h = self.sys.omega.integral_between_lifts(&lift, m).unwrap_or(f64::NEG_INFINITY);
            let w = (self.t * h).exp() * q * q;
            match acc.iter_mut().find(|a| a.0 == src) {
                Some(a) => a.1 += w,
                None => acc.push((src, w)),
            }
        }
    }
}

/// Per-cell weights ∫_{cell ∩ W⁻_x} e^{t h_x} for every source x.
fn basin_weights(sys: &FieldSystem, dec: &DiscreteDeRham, rest_points: &[RestPoint], t: f64) -> (Vec<Vec<(usize, f64)>>, usize, usize) {
    let sources = rest_points.iter().enumerate().filter(|(_, r)| r.morse_index == 2).map(|(i, r)| (i, r.position.clone())).collect();
    let basin = Basin { sys, sources, t };
    let cells: Vec<(Vec<(usize, f64)>, usize, usize)> = (0..dec.n * dec.n)
        .into_par_iter()
        .map(|f| {
            let (i, j) = (f % dec.n, f / dec.n);
            let (mut acc, mut nodes, mut unl) = (Vec::new(), 0, 0);
            basin.square([i as f64 * dec.h, j as f64 * dec.h], dec.h, 0, &mut acc, &mut nodes, &mut unl);
            (acc, nodes, unl)
        })
        .collect();
    let nodes = cells.iter().map(|c| c.1).sum();
    let unlabeled = cells.iter().map(|c| c.2).sum();
    (cells.into_iter().map(|c| c.0).collect(), nodes, unlabeled)
}

fn orientation_sign(r: &RestPoint) -> f64 {
    if r.oriented_unstable().determinant() > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Integrals of the small eigenforms over unstable manifolds, weighted by e^{t h_x}.
pub fn integration_map(sys: &FieldSystem, dec: &DiscreteDeRham, split: &SpectralSplit, rest_points: &[RestPoint]) -> Result<IntegrationMap> {
    if sys.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: sys.dim() });
    }
    let t = split.t;
    let mut matrices = Vec::new();
    let mut patches = Vec::new();
    for (k, deg) in split.degrees.iter().enumerate() {
        let cochains: Vec<Vec<f64>> = (0..deg.small_count).map(|j| dec.to_cochain(k, deg.vectors.column(j).as_slice())).collect();
        let cells: Vec<usize> = (0..rest_points.len()).filter(|&i| rest_points[i].morse_index == k).collect();
        let mut m = DMatrix::zeros(cells.len(), cochains.len());
        let weights = if k == 2 && !cells.is_empty() { Some(basin_weights(sys, dec, rest_points, t)) } else { None };
        for (row, &x) in cells.iter().enumerate() {
            let mut patch = PatchRecord { rest_point: x, index: k, rays: Vec::new(), nodes: 0, unlabeled: 0 };
            match k {
                0 => {
                    for (j, c) in cochains.iter().enumerate() {
                        m[(row, j)] = dec.whitney0(c, &rest_points[x].position);
                    }
                }
                1 => {
                    for side in [1, -1] {
                        let (vals, rec) = ray_integral(sys, dec, rest_points, x, side, &cochains, t)?;
                        for (j, v) in vals.iter().enumerate() {
                            m[(row, j)] += v;
                        }
                        patch.rays.push(rec);
                    }
                }
                _ => {
                    let (w, nodes, unlabeled) = weights.as_ref().unwrap();
                    let o = orientation_sign(&rest_points[x]);
                    for (j, c) in cochains.iter().enumerate() {
                        let mut s = 0.0;
                        for (f, cell) in w.iter().enumerate() {
                            for &(src, wt) in cell {
                                if src == x {
                                    s += wt * c[f] / (dec.h * dec.h);
                                }
                            }
                        }
                        m[(row, j)] = o * s;
                    }
                    patch.nodes = *nodes;
                    patch.unlabeled = *unlabeled;
                }
            }
            patches.push(patch);
        }
        matrices.push(m);
    }
    Ok(IntegrationMap { t, grid: dec.n, matrices, patches })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainResidual {
    /// ‖Int^{k+1}∘d − δ^k(t)∘Int^k‖_F per k.
    pub absolute: Vec<f64>,
    /// Σ absolute / Σ ‖δ^k(t)∘Int^k‖_F.
    pub relative: f64,
}

/// Compares Int∘d_t on the small subcomplex with δ(t)∘Int, δ(t) the Novikov
/// differential at z = −t.
pub fn chain_residual(intmap: &IntegrationMap, wop: &WittenOperator, split: &SpectralSplit, cx: &NovikovComplex) -> ChainResidual {
    let mut absolute = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..2 {
        let (qk, ql) = (&split.degrees[k].vectors, &split.degrees[k + 1].vectors);
        let c = ql.transpose() * wop.d[k].mul_dense(qk);
        let lhs = &intmap.matrices[k + 1] * c;
        let rhs = cx.delta_at(k, -intmap.t) * &intmap.matrices[k];
        let r = (&lhs - &rhs).norm();
        absolute.push(r);
        num += r;
        den += rhs.norm();
    }
    ChainResidual { absolute, relative: if den > 0.0 { num / den } else { num } }
}
