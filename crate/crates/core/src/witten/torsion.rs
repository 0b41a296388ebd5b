use nalgebra::DMatrix;
use serde::Serialize;

use super::dec::WittenOperator;
use super::intmap::IntegrationMap;
use super::sparse::{Csr, EnvelopeCholesky};
use super::split::SpectralSplit;
use crate::error::{Error, Result};
use crate::novikov::{NovikovComplex, OrbitCounting};

pub const CONTINUUM_CAVEAT: &str =
    "finite-model determinants are not zeta-regularized; the combination is reported, not expected to vanish";

#[derive(Debug, Clone, Serialize)]
pub struct DegreeLogDets {
    pub degree: usize,
    pub kernel: usize,
    /// log det′ of the full Laplacian.
    pub an: f64,
    /// Σ log λ over the positive small eigenvalues.
    pub sm: f64,
    /// log det of the Laplacian on the large eigenspace.
    pub la: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorsionReport {
    pub t: f64,
    pub grid: usize,
    pub log_dets: Vec<DegreeLogDets>,
    pub log_vol: f64,
    pub log_t_sm: f64,
    pub log_t_la: f64,
    pub log_t_an: f64,
    pub log_t_x: f64,
    /// Torsion of the instanton differential δ(z = −t) itself, when acyclic.
    pub log_t_x_dynamical: Option<f64>,
    /// ‖J d J⁻¹ − δ‖/‖δ‖ when Int is invertible.
    pub delta_mismatch: Option<f64>,
    pub r: Option<f64>,
    pub z_value: Option<f64>,
    /// |logT_an − logT_sm − logT_la|, relative.
    pub residual_split: f64,
    /// max_k |an − sm − la| / |an| over degrees.
    pub residual_split_per_degree: f64,
    /// |logVol − (logT_sm − logT_X)|, relative.
    pub residual_volume: f64,
    /// logT_la − logVol + tℛ − Z(t).
    pub continuum_combination: Option<f64>,
    pub caveat: &'static str,
}

/// ½ Σ_k k(−1)^{k+1} ℓ_k.
pub fn torsion_sum(log_dets: &[f64]) -> f64 {
    0.5 * log_dets.iter().enumerate().map(|(k, l)| if k % 2 == 1 { k as f64 * l } else { -(k as f64) * l }).sum::<f64>()
}

fn richardson(f: impl Fn(f64) -> Result<f64>, eps: f64) -> Result<f64> {
    let (a, b, c) = (f(eps)?, f(eps / 2.0)?, f(eps / 4.0)?);
    let (r1, r2) = (2.0 * b - a, 2.0 * c - b);
    Ok((4.0 * r2 - r1) / 3.0)
}

fn signed_log_det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().lu().determinant().abs().ln()
}

/// log det′, small and large parts for one degree.
fn degree_log_dets(lap: &Csr, k: usize, split: &SpectralSplit) -> Result<DegreeLogDets> {
    let d = &split.degrees[k];
    let small = d.small_values();
    let kernel = d.kernel;
    let sm: f64 = small.iter().filter(|&&v| v >= d.resolution).map(|v| v.ln()).sum();
    let first_large = d.values.get(d.small_count).copied().ok_or(Error::SingularLaplacian { degree: k })?;
    let eps = 1e-3 * first_large;
    let chol = |e: f64| EnvelopeCholesky::factor(&lap.shifted(e)).map_err(|_| Error::SingularLaplacian { degree: k });

    let q = &d.vectors;
    let la = richardson(
        |e| {
            let f = chol(e)?;
            let c = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(small.len(), small.iter().map(|l| 1.0 - e - l)));
            let cinv = DMatrix::from_diagonal(&c.diagonal().map(|x| 1.0 / x));
            let inner = cinv + q.transpose() * f.solve_dense(q);
            Ok(f.log_det() + signed_log_det(&c) + signed_log_det(&inner))
        },
        eps,
    )?;
    let an = if kernel == 0 {
        chol(0.0)?.log_det()
    } else {
        let min_pos = d.values.iter().copied().find(|&v| v >= d.resolution).unwrap_or(first_large);
        let ker: Vec<f64> = small.iter().copied().filter(|&v| v < d.resolution).collect();
        richardson(|e| Ok(chol(e)?.log_det() - ker.iter().map(|l| (l.max(0.0) + e).ln()).sum::<f64>()), 1e-3 * min_pos)?
    };
    Ok(DegreeLogDets { degree: k, kernel, an, sm, la })
}

/// log det′ of the Laplacians of a finite cochain complex with standard inner products.
pub fn complex_log_dets(diffs: &[DMatrix<f64>], dims: &[usize]) -> Vec<f64> {
    (0..dims.len())
        .map(|k| {
            if dims[k] == 0 {
                return 0.0;
            }
            let mut lap = DMatrix::zeros(dims[k], dims[k]);
            if k > 0 {
                lap += &diffs[k - 1] * diffs[k - 1].transpose();
            }
            if k < diffs.len() {
                lap += diffs[k].transpose() * &diffs[k];
            }
            let vals = lap.symmetric_eigen().eigenvalues;
            let tol = 1e-12 * vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            vals.iter().filter(|&&v| v > tol).map(|v| v.ln()).sum()
        })
        .collect()
}

/// Torsions, volume and identity residuals at the operator's t.
pub fn torsion_report(
    wop: &WittenOperator,
    split: &SpectralSplit,
    intmap: &IntegrationMap,
    cx: &NovikovComplex,
    r: Option<f64>,
    orbits: Option<&OrbitCounting>,
) -> Result<TorsionReport> {
    let t = wop.t;
    let log_dets = (0..3).map(|k| degree_log_dets(&wop.laplacians[k], k, split)).collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&DegreeLogDets) -> f64| log_dets.iter().map(f).collect::<Vec<f64>>();
    let (log_t_an, log_t_sm, log_t_la) = (torsion_sum(&pick(|d| d.an)), torsion_sum(&pick(|d| d.sm)), torsion_sum(&pick(|d| d.la)));

    // positive part of the small complex, carried into the rest-point basis by Int
    let pos: Vec<DMatrix<f64>> = split
        .degrees
        .iter()
        .map(|d| {
            let cols: Vec<usize> = (0..d.small_count).filter(|&j| d.values[j] >= d.resolution).collect();
            d.vectors.select_columns(&cols)
        })
        .collect();
    let mut frames = Vec::new();
    let mut log_vol = 0.0;
    for k in 0..3 {
        let pos_cols: Vec<usize> = (0..split.degrees[k].small_count).filter(|&j| split.degrees[k].values[j] >= split.degrees[k].resolution).collect();
        let jp = intmap.matrices[k].select_columns(&pos_cols);
        let qr = jp.clone().qr();
        let rk = qr.r();
        let vol_k = if jp.ncols() == 0 { 0.0 } else { 0.5 * signed_log_det(&(jp.transpose() * &jp)) };
        log_vol += if k % 2 == 0 { vol_k } else { -vol_k };
        frames.push(rk);
    }
    let mut diffs = Vec::new();
    for k in 0..2 {
        let c = pos[k + 1].transpose() * wop.d[k].mul_dense(&pos[k]);
        let rinv = frames[k].clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(frames[k].ncols(), frames[k].nrows()));
        diffs.push(&frames[k + 1] * c * rinv);
    }
    let dims: Vec<usize> = pos.iter().map(|p| p.ncols()).collect();
    let log_t_x = torsion_sum(&complex_log_dets(&diffs, &dims));

    let delta: Vec<DMatrix<f64>> = (0..2).map(|k| cx.delta_at(k, -t)).collect();
    let acyclic = split.degrees.iter().all(|d| d.kernel == 0);
    let log_t_x_dynamical = acyclic.then(|| torsion_sum(&complex_log_dets(&delta, &cx.n_k)));
    let square = (0..3).all(|k| intmap.matrices[k].is_square());
    let delta_mismatch = if square && acyclic {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..2 {
            let c = split.degrees[k + 1].vectors.transpose() * wop.d[k].mul_dense(&split.degrees[k].vectors);
            if let Some(inv) = intmap.matrices[k].clone().try_inverse() {
                num += (&intmap.matrices[k + 1] * c * inv - &delta[k]).norm();
                den += delta[k].norm();
            }
        }
        (den > 0.0).then(|| num / den)
    } else {
        None
    };

    let rel = |x: f64, scale: &[f64]| x / scale.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual_split = rel((log_t_an - log_t_sm - log_t_la).abs(), &[log_t_an, log_t_sm, log_t_la]);
    let residual_split_per_degree = log_dets.iter().map(|d| rel((d.an - d.sm - d.la).abs(), &[d.an])).fold(0.0, f64::max);
    let residual_volume = rel((log_vol - (log_t_sm - log_t_x)).abs(), &[log_vol, log_t_sm, log_t_x]);
    let z_value = orbits.map(|o| o.laplace().eval_real(-t));
    let continuum_combination = r.map(|r| log_t_la - log_vol + t * r - z_value.unwrap_or(0.0));
    Ok(TorsionReport {
        t,
        grid: wop.n,
        log_dets,
        log_vol,
        log_t_sm,
        log_t_la,
        log_t_an,
        log_t_x,
        log_t_x_dynamical,
        delta_mismatch,
        r,
        z_value,
        residual_split,
        residual_split_per_degree,
        residual_volume,
        continuum_combination,
        caveat: CONTINUUM_CAVEAT,
    })
}
