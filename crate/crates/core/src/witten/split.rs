use nalgebra::DMatrix;
use serde::Serialize;

use super::dec::{build_dec, witten_operator, WittenOperator};
use super::eigen::{dense_eigenpairs, lowest_eigenpairs};
use crate::error::{Error, Result};
use crate::torus::ClosedOneForm;

pub const MIN_GAP_RATIO: f64 = 10.0;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DegreeSplit {
    pub degree: usize,
    /// Lowest eigenvalues, ascending.
    pub values: Vec<f64>,
    pub small_count: usize,
    pub target: usize,
    pub theta: f64,
    pub gap_ratio: f64,
    /// Eigenvalues below this are treated as exact zeros.
    pub resolution: f64,
    pub kernel: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Small eigenvectors in mass-orthonormal coordinates.
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
}

impl DegreeSplit {
    pub fn small_values(&self) -> &[f64] {
        &self.values[..self.small_count]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSplit {
    pub t: f64,
    pub grid: usize,
    pub degrees: Vec<DegreeSplit>,
    pub small_counts: Vec<usize>,
    pub matches_targets: bool,
}

impl SpectralSplit {
    pub fn min_gap_ratio(&self) -> f64 {
        self.degrees.iter().map(|d| d.gap_ratio).fold(f64::INFINITY, f64::min)
    }
}

/// Threshold window [10⁻⁶t, 10t], with t replaced by 1 when t < 1.
pub fn split_window(t: f64) -> (f64, f64) {
    let s = t.max(1.0);
    (1e-6 * s, 10.0 * s)
}

/// Largest multiplicative gap between consecutive values whose interval meets
/// the window; values below `resolution` are clamped to it. Returns
/// (small count, θ, ratio). When no gap reaches the minimum ratio but every
/// value is at least t, the split has no small part.
pub fn choose_split(values: &[f64], resolution: f64, t: f64) -> Option<(usize, f64, f64)> {
    let (lo, hi) = split_window(t);
    let v: Vec<f64> = values.iter().map(|&x| x.max(resolution)).collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for i in 0..v.len().saturating_sub(1) {
        if v[i] < hi && v[i + 1] > lo {
            let ratio = v[i + 1] / v[i];
            if best.map_or(true, |b| ratio > b.2) {
                let theta = (v[i] * v[i + 1]).sqrt().clamp(lo, hi);
                best = Some((i + 1, theta, ratio));
            }
        }
    }
    match best {
        Some(b) if b.2 >= MIN_GAP_RATIO => Some(b),
        _ if !v.is_empty() && v[0] >= t.max(1.0) => Some((0, lo, v[0] / lo)),
        _ => None,
    }
}

fn split_degree(lap: &crate::witten::sparse::Csr, k: usize, target: usize, t: f64) -> Result<DegreeSplit> {
    let want = target + target.max(4);
    let block = want + target.max(8);
    let shift = 1e-3 * (1.0 + t);
    let e = lowest_eigenpairs(lap, want, block, shift, RESIDUAL_TOL)?;
    let resolution = 64.0 * f64::EPSILON * lap.norm_inf();
    let Some((small_count, theta, gap_ratio)) = choose_split(&e.values, resolution, t) else {
        return Err(Error::SplitRejected(format!(
            "degree {k}: no gap of ratio ≥ {MIN_GAP_RATIO} in window {:?} (lowest eigenvalues {:?})",
            split_window(t),
            &e.values[..e.values.len().min(target + 3)]
        )));
    };
    let kernel = e.values[..small_count].iter().filter(|&&v| v < resolution).count();
    Ok(DegreeSplit {
        degree: k,
        vectors: e.vectors.columns(0, small_count).into_owned(),
        values: e.values,
        small_count,
        target,
        theta,
        gap_ratio,
        resolution,
        kernel,
        iterations: e.iterations,
        residual: e.max_residual,
    })
}

/// Small/large splitting of every degree, sized by the expected counts `targets`.
pub fn spectral_split(wop: &WittenOperator, targets: &[usize]) -> Result<SpectralSplit> {
    if targets.len() != 3 {
        return Err(Error::Dimension { expected: 3, found: targets.len() });
    }
    let degrees = (0..3).map(|k| split_degree(&wop.laplacians[k], k, targets[k], wop.t)).collect::<Result<Vec<_>>>()?;
    let small_counts: Vec<usize> = degrees.iter().map(|d| d.small_count).collect();
    Ok(SpectralSplit { t: wop.t, grid: wop.n, matches_targets: small_counts == targets, small_counts, degrees })
}

/// Dimensions of the near-kernel (eigenvalues below 10⁻⁸‖Δ‖) of the Laplacians
/// of d + tξ∧ on a 16×16 grid.
pub fn spectral_betti(xi: &[f64], t: f64) -> Result<Vec<usize>> {
    let dec = build_dec(16)?;
    let form = ClosedOneForm::harmonic(xi.to_vec());
    let w = witten_operator(&dec, &form, t)?;
    Ok(w.laplacians
        .iter()
        .map(|lap| {
            let (vals, _) = dense_eigenpairs(&lap.to_dense());
            let tol = 1e-8 * lap.norm_inf();
            vals.iter().filter(|&&v| v < tol).count()
        })
        .collect())
}
