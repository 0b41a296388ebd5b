use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{Csr, EnvelopeCholesky};
use crate::error::{Error, Result};

/// Below this size the dense symmetric solver is used directly.
pub const DENSE_LIMIT: usize = 400;
const MAX_ITER: usize = 800;

/// Lowest eigenpairs, ascending; vectors are orthonormal columns.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].partial_cmp(&e.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(e.eigenvectors.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// All eigenpairs of a symmetric matrix, ascending.
pub fn dense_eigenpairs(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    sorted_eigen(a.clone())
}

fn residuals(a: &Csr, vals: &[f64], x: &DMatrix<f64>, count: usize) -> f64 {
    let ax = a.mul_dense(&x.columns(0, count).into_owned());
    (0..count).map(|i| (ax.column(i) - x.column(i) * vals[i]).norm()).fold(0.0, f64::max)
}

/// The `want` lowest eigenpairs of a symmetric positive semidefinite matrix by
/// subspace iteration with (A + sI)⁻¹ and Rayleigh–Ritz on a block of `block` vectors.
pub fn lowest_eigenpairs(a: &Csr, want: usize, block: usize, shift: f64, rel_tol: f64) -> Result<Eigenpairs> {
    let n = a.rows;
    let want = want.min(n);
    let norm = a.norm_inf().max(f64::MIN_POSITIVE);
    if n <= DENSE_LIMIT || 2 * block >= n {
        let (vals, vecs) = sorted_eigen(a.to_dense());
        let x = vecs.columns(0, want).into_owned();
        let max_residual = residuals(a, &vals, &x, want);
        return Ok(Eigenpairs { values: vals[..want].to_vec(), vectors: x, iterations: 0, max_residual });
    }
    let p = block.max(want + 1).min(n);
    let chol = EnvelopeCholesky::factor(&a.shifted(shift))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
    let mut vals = vec![0.0; p];
    let mut res = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let q = chol.solve_dense(&x).qr().q();
        let aq = a.mul_dense(&q);
        let h = q.transpose() * &aq;
        let (v, w) = sorted_eigen((&h + h.transpose()) * 0.5);
        x = q * w;
        vals = v;
        res = residuals(a, &vals, &x, want);
        if res <= rel_tol * norm {
            return Ok(Eigenpairs { values: vals[..want].to_vec(), vectors: x.columns(0, want).into_owned(), iterations: it, max_residual: res });
        }
    }
    Err(Error::Linalg(format!(
        "subspace iteration did not converge: residual {res:.3e} (lowest values {:?})",
        &vals[..want.min(4)]
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Periodic 2D grid Laplacian: eigenvalues 4 sin²(πk/m) + 4 sin²(πl/m).
    fn grid(m: usize) -> Csr {
        let idx = |i: usize, j: usize| (i % m) + m * (j % m);
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                t.push((idx(i, j), idx(i, j), 4.0));
                for (a, b) in [(i + 1, j), (i + m - 1, j), (i, j + 1), (i, j + m - 1)] {
                    t.push((idx(i, j), idx(a, b), -1.0));
                }
            }
        }
        Csr::from_triplets(m * m, m * m, t)
    }

    #[test]
    fn matches_closed_form_spectrum() {
        let m = 24;
        let a = grid(m);
        let e = lowest_eigenpairs(&a, 6, 14, 1e-2, 1e-10).unwrap();
        assert!(e.iterations > 0);
        let s = |k: usize| 4.0 * (std::f64::consts::PI * k as f64 / m as f64).sin().powi(2);
        let mut exact: Vec<f64> = (0..m).flat_map(|k| (0..m).map(move |l| (k, l))).map(|(k, l)| s(k) + s(l)).collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 0..6 {
            assert!((e.values[i] - exact[i]).abs() < 1e-9, "{i}: {} vs {}", e.values[i], exact[i]);
        }
        let g = e.vectors.transpose() * &e.vectors;
        assert!((g - DMatrix::identity(6, 6)).abs().max() < 1e-10);
    }

    #[test]
    fn dense_path_agrees() {
        let a = grid(8);
        let e = lowest_eigenpairs(&a, 5, 8, 1e-2, 1e-10).unwrap();
        let (d, _) = dense_eigenpairs(&a.to_dense());
        assert!(e.values.iter().zip(&d).all(|(x, y)| (x - y).abs() < 1e-10));
    }
}
