use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::system::{grid_points, FieldSystem};
use crate::torus::reduce_coord;

pub const DEFAULT_SEED_GRID: usize = 32;
const DEDUP_RADIUS: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct RestPoint {
    pub position: Vec<f64>,
    pub jacobian: Vec<Vec<f64>>,
    /// (re, im) pairs sorted by decreasing real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub morse_index: usize,
    pub hyperbolic: bool,
    /// Orthonormal basis of the unstable generalized eigenspace.
    pub unstable_frame: Vec<Vec<f64>>,
    pub stable_frame: Vec<Vec<f64>>,
    pub orientation: i32,
    /// ‖(I − ΠΠᵀ)JΠ‖ for the unstable frame.
    pub frame_residual: f64,
}

impl RestPoint {
    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn jacobian_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.jacobian[i][j])
    }

    fn frame_matrix(&self, frame: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), frame.len(), |i, j| frame[j][i])
    }

    /// Unstable frame as columns, with the orientation sign applied to the first column.
    pub fn oriented_unstable(&self) -> DMatrix<f64> {
        let mut m = self.frame_matrix(&self.unstable_frame);
        if self.orientation < 0 && m.ncols() > 0 {
            m.column_mut(0).neg_mut();
        }
        m
    }

    pub fn stable_matrix(&self) -> DMatrix<f64> {
        self.frame_matrix(&self.stable_frame)
    }

    pub fn with_orientation(&self, o: i32) -> RestPoint {
        RestPoint { orientation: o.signum(), ..self.clone() }
    }
}

pub fn find_rest_points(sys: &FieldSystem) -> Result<Vec<RestPoint>> {
    find_rest_points_with(sys, DEFAULT_SEED_GRID)
}

pub fn find_rest_points_with(sys: &FieldSystem, seed_grid: usize) -> Result<Vec<RestPoint>> {
    let seeds = grid_points(sys.dim(), seed_grid);
    let roots: Vec<Vec<f64>> = seeds
        .par_iter()
        .filter_map(|s| newton(sys, s))
        .collect();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        if unique.iter().all(|u| sys.domain.distance(u, &r) > DEDUP_RADIUS) {
            unique.push(r);
        }
    }
    let mut points = unique
        .into_iter()
        .map(|p| classify_rest_point(sys, &p))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| {
        a.morse_index
            .cmp(&b.morse_index)
            .then_with(|| a.position.partial_cmp(&b.position).unwrap())
    });
    Ok(points)
}

fn newton(sys: &FieldSystem, seed: &[f64]) -> Option<Vec<f64>> {
    let tol = sys.tolerances.newton;
    let mut p = seed.to_vec();
    for _ in 0..NEWTON_MAX_ITER {
        let (x, j) = sys.field_and_jacobian(&p).ok()?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let Some(step) = j.lu().solve(&DVector::from_vec(x)) else {
            return (norm <= tol).then(|| reduce(&p));
        };
        let step_norm = step.norm();
        if norm <= tol && step_norm <= 1e-14 {
            return Some(reduce(&p));
        }
        if !step_norm.is_finite() || step_norm > 1.0 {
            return None;
        }
        for (pi, s) in p.iter_mut().zip(step.iter()) {
            *pi -= s;
        }
    }
    let x = sys.field_at(&p).ok()?;
    (x.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol).then(|| reduce(&p))
}

fn reduce(p: &[f64]) -> Vec<f64> {
    p.iter()
        .map(|&x| {
            let r = reduce_coord(x);
            if !(1e-13..=1.0 - 1e-13).contains(&r) {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// Eigenvalues, index and invariant frames of D_p X.
pub fn classify_rest_point(sys: &FieldSystem, p: &[f64]) -> Result<RestPoint> {
    let n = sys.dim();
    let j = sys.jacobian(p)?;
    let mut eig: Vec<[f64; 2]> = j.complex_eigenvalues().iter().map(|c| [c.re, c.im]).collect();
    eig.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap().then(b[1].partial_cmp(&a[1]).unwrap()));
    let hyperbolic = eig.iter().all(|e| e[0].abs() > sys.tolerances.hyperbolic);
    let morse_index = eig.iter().filter(|e| e[0] > 0.0).count();
    let (unstable_frame, stable_frame, frame_residual) = if hyperbolic {
        spectral_frames(&j, morse_index)
    } else {
        (Vec::new(), Vec::new(), f64::NAN)
    };
    Ok(RestPoint {
        position: p.to_vec(),
        jacobian: (0..n).map(|r| (0..n).map(|c| j[(r, c)]).collect()).collect(),
        eigenvalues: eig,
        morse_index,
        hyperbolic,
        unstable_frame,
        stable_frame,
        orientation: 1,
        frame_residual,
    })
}

/// Matrix sign function by scaled Newton iteration.
fn matrix_sign(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let mut s = j.clone();
    for it in 0..200 {
        let Some(inv) = s.clone().try_inverse() else { break };
        let c = if it < 10 {
            let d = s.determinant().abs();
            if d > 0.0 { d.powf(-1.0 / n as f64) } else { 1.0 }
        } else {
            1.0
        };
        let next = (&s * c + inv / c) * 0.5;
        let diff = (&next - &s).norm();
        s = next;
        if diff <= 1e-14 * s.norm() {
            break;
        }
    }
    s
}

/// Orthonormal basis of the range of a rank-k projector, sign-normalized.
fn range_basis(p: &DMatrix<f64>, k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return Vec::new();
    }
    let svd = p.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    order
        .into_iter()
        .take(k)
        .map(|c| {
            let mut v: Vec<f64> = u.column(c).iter().copied().collect();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect()
}

fn spectral_frames(j: &DMatrix<f64>, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, f64) {
    let n = j.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let s = matrix_sign(j);
    let unstable = range_basis(&((&id + &s) * 0.5), k);
    let stable = range_basis(&((&id - &s) * 0.5), n - k);
    let residual = if k == 0 {
        0.0
    } else {
        let pi = DMatrix::from_fn(n, k, |r, c| unstable[c][r]);
        let proj = &id - &pi * pi.transpose();
        (proj * j * &pi).norm()
    };
    (unstable, stable, residual)
}
