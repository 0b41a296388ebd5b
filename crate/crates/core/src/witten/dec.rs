use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::torus::ClosedOneForm;

/// Cubical cochains on the periodic N×N grid of T² with spacing h = 1/N.
///
/// Vertex (i, j) sits at (ih, jh). Edge numbering: x-edge (i, j) → (i+1, j) is
/// `i + N j`, y-edge (i, j) → (i, j+1) is `N² + i + N j`. Face (i, j) is
/// `i + N j`, with boundary x(i,j) + y(i+1,j) − x(i,j+1) − y(i,j).
#[derive(Debug, Clone)]
pub struct DiscreteDeRham {
    pub n: usize,
    pub h: f64,
    pub d0: Csr,
    pub d1: Csr,
    /// Diagonal Hodge mass per degree: h², 1, h⁻².
    pub mass: [f64; 3],
}

impl DiscreteDeRham {
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        (i % self.n) + self.n * (j % self.n)
    }

    pub fn x_edge(&self, i: usize, j: usize) -> usize {
        self.vertex(i, j)
    }

    pub fn y_edge(&self, i: usize, j: usize) -> usize {
        self.n * self.n + self.vertex(i, j)
    }

    pub fn dims(&self) -> [usize; 3] {
        let m = self.n * self.n;
        [m, 2 * m, m]
    }

    /// Cochain values of a vector in mass-orthonormal coordinates.
    pub fn to_cochain(&self, k: usize, u: &[f64]) -> Vec<f64> {
        let s = self.mass[k].sqrt();
        u.iter().map(|x| x / s).collect()
    }

    /// Bilinear interpolation of a 0-cochain.
    pub fn whitney0(&self, c: &[f64], p: &[f64]) -> f64 {
        let (i, j, s, r) = self.locate(p);
        let v = |a, b| c[self.vertex(i + a, j + b)];
        (1.0 - s) * (1.0 - r) * v(0, 0) + s * (1.0 - r) * v(1, 0) + (1.0 - s) * r * v(0, 1) + s * r * v(1, 1)
    }

    /// Whitney 1-form of a 1-cochain, as (dx, dy) components.
    pub fn whitney1(&self, c: &[f64], p: &[f64]) -> [f64; 2] {
        let (i, j, s, r) = self.locate(p);
        let fx = (1.0 - r) * c[self.x_edge(i, j)] + r * c[self.x_edge(i, j + 1)];
        let fy = (1.0 - s) * c[self.y_edge(i, j)] + s * c[self.y_edge(i + 1, j)];
        [fx / self.h, fy / self.h]
    }

    /// Density of the Whitney 2-form of a 2-cochain.
    pub fn whitney2(&self, c: &[f64], p: &[f64]) -> f64 {
        let (i, j, _, _) = self.locate(p);
        c[self.vertex(i, j)] / (self.h * self.h)
    }

    /// Cell (i, j) containing p and local coordinates in [0, 1).
    pub fn locate(&self, p: &[f64]) -> (usize, usize, f64, f64) {
        let cell = |x: f64| {
            let y = x.rem_euclid(1.0) * self.n as f64;
            let i = (y.floor() as usize).min(self.n - 1);
            (i, y - i as f64)
        };
        let (i, s) = cell(p[0]);
        let (j, r) = cell(p[1]);
        (i, j, s, r)
    }
}

pub fn build_dec(n: usize) -> Result<DiscreteDeRham> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("grid N = {n}; need N ≥ 8")));
    }
    let h = 1.0 / n as f64;
    let mut dec = DiscreteDeRham { n, h, d0: Csr::identity(0), d1: Csr::identity(0), mass: [h * h, 1.0, 1.0 / (h * h)] };
    let (d0, d1) = incidence(&dec, [0.0, 0.0], |_, _| 1.0);
    dec.d0 = d0;
    dec.d1 = d1;
    debug_assert!(dec.d1.matmul(&dec.d0).values.iter().all(|&v| v == 0.0));
    Ok(dec)
}

/// Coboundaries of d + W where W is the averaged wedge with a form whose
/// integrals over x- and y-segments of length h are `w(x_or_y, point)`; entries
/// are multiplied by `scale(row_cell, col_cell)` of the respective degrees.
fn incidence(dec: &DiscreteDeRham, wedge: [f64; 2], scale: impl Fn(usize, (usize, usize)) -> f64) -> (Csr, Csr) {
    incidence_with(dec, |axis, _, _| wedge[axis], scale)
}

fn incidence_with(
    dec: &DiscreteDeRham,
    wedge: impl Fn(usize, usize, usize) -> f64,
    scale: impl Fn(usize, (usize, usize)) -> f64,
) -> (Csr, Csr) {
    let n = dec.n;
    let [m0, m1, m2] = dec.dims();
    let mut t0 = Vec::with_capacity(4 * m0);
    let mut t1 = Vec::with_capacity(8 * m2);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01) = (dec.vertex(i, j), dec.vertex(i + 1, j), dec.vertex(i, j + 1));
            let ex = dec.x_edge(i, j);
            let ey = dec.y_edge(i, j);
            // x-edge: f(i+1, j) − f(i, j) + w_x (f(i, j) + f(i+1, j))/2
            let wx = wedge(0, ex, 0);
            t0.push((ex, v00, (-1.0 + 0.5 * wx) * scale(0, (ex, v00))));
            t0.push((ex, v10, (1.0 + 0.5 * wx) * scale(0, (ex, v10))));
            let wy = wedge(1, ey, 0);
            t0.push((ey, v00, (-1.0 + 0.5 * wy) * scale(0, (ey, v00))));
            t0.push((ey, v01, (1.0 + 0.5 * wy) * scale(0, (ey, v01))));
            // face: D_x(b_y) − D_y(b_x)
            let f = v00;
            let (fx, fy) = (wedge(0, f, 1), wedge(1, f, 1));
            for (e, coef) in [
                (dec.y_edge(i + 1, j), 1.0 + 0.5 * fx),
                (dec.y_edge(i, j), -1.0 + 0.5 * fx),
                (dec.x_edge(i, j), 1.0 - 0.5 * fy),
                (dec.x_edge(i, j + 1), -1.0 - 0.5 * fy),
            ] {
                t1.push((f, e, coef * scale(1, (f, e))));
            }
        }
    }
    (Csr::from_triplets(m1, m0, t0), Csr::from_triplets(m2, m1, t1))
}

/// Δ_k = D_{k−1} D_{k−1}ᵀ + D_kᵀ D_k for mass-orthonormal differentials D.
pub fn hodge_laplacians(d0: &Csr, d1: &Csr) -> [Csr; 3] {
    let (d0t, d1t) = (d0.transpose(), d1.transpose());
    [d0t.matmul(d0), Csr::lin_comb(1.0, &d0.matmul(&d0t), 1.0, &d1t.matmul(d1)), d1.matmul(&d1t)]
}

/// Witten-deformed complex and Laplacians at parameter t.
///
/// `d` is the exact complex Λ⁻¹(d + tW_a)Λ with Λ = e^{tF} averaged over the
/// vertices of each cell (ω = a + dF); it satisfies d₁d₀ = 0 for every t.
/// `a`, `b` are the coefficients of the linear model d + tW with W the wedge
/// with ω sampled at edge midpoints and face centres: its Laplacians are
/// exactly Δ(0) + tA + t²B.
#[derive(Debug, Clone)]
pub struct WittenOperator {
    pub t: f64,
    pub n: usize,
    /// Mass-orthonormal differentials d_t/h.
    pub d: [Csr; 2],
    pub laplacians: [Csr; 3],
    pub a: [Csr; 3],
    pub b: [Csr; 3],
}

impl WittenOperator {
    /// Δ(0) + tA + t²B at another parameter value.
    pub fn linear_model(&self, dec: &DiscreteDeRham, s: f64) -> [Csr; 3] {
        let lap0 = hodge_laplacians(&scaled(&dec.d0, 1.0 / dec.h), &scaled(&dec.d1, 1.0 / dec.h));
        let mut out = lap0;
        for k in 0..3 {
            out[k] = Csr::lin_comb(1.0, &Csr::lin_comb(1.0, &out[k], s, &self.a[k]), s * s, &self.b[k]);
        }
        out
    }

    pub fn norm(&self, k: usize) -> f64 {
        self.laplacians[k].norm_inf()
    }
}

fn scaled(a: &Csr, s: f64) -> Csr {
    Csr { values: a.values.iter().map(|v| v * s).collect(), ..a.clone() }
}

/// Cell midpoints: edges of each axis and faces.
fn midpoint(dec: &DiscreteDeRham, degree: usize, idx: usize) -> [f64; 2] {
    let m = dec.n * dec.n;
    let (axis, v) = if idx >= m { (1, idx - m) } else { (0, idx) };
    let (i, j) = ((v % dec.n) as f64, (v / dec.n) as f64);
    let h = dec.h;
    match (degree, axis) {
        (1, 0) => [(i + 0.5) * h, j * h],
        (1, _) => [i * h, (j + 0.5) * h],
        _ => [(i + 0.5) * h, (j + 0.5) * h],
    }
}

/// The differentials d + tW of the linear model, mass-orthonormal.
pub fn linear_differentials(dec: &DiscreteDeRham, omega: &ClosedOneForm, t: f64) -> Result<[Csr; 2]> {
    let [_, m1, m2] = dec.dims();
    let mut wx = vec![[0.0; 2]; m1];
    let mut wf = vec![[0.0; 2]; m2];
    for (e, w) in wx.iter_mut().enumerate() {
        let p = midpoint(dec, 1, e);
        let axis = if e >= m2 { 1 } else { 0 };
        w[axis] = t * dec.h * omega.at(&p)?[axis];
    }
    for (f, w) in wf.iter_mut().enumerate() {
        let o = omega.at(&midpoint(dec, 2, f))?;
        *w = [t * dec.h * o[0], t * dec.h * o[1]];
    }
    let (d0, d1) = incidence_with(dec, |axis, cell, deg| if deg == 0 { wx[cell][axis] } else { wf[cell][axis] }, |_, _| 1.0);
    Ok([scaled(&d0, 1.0 / dec.h), scaled(&d1, 1.0 / dec.h)])
}

pub fn witten_operator(dec: &DiscreteDeRham, omega: &ClosedOneForm, t: f64) -> Result<WittenOperator> {
    if omega.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: omega.dim() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t}; need t ≥ 0")));
    }
    let n = dec.n;
    let h = dec.h;
    let a = omega.cohomology_class();
    let mut f = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            f[dec.vertex(i, j)] = t * omega.potential_at(&[i as f64 * h, j as f64 * h])?;
        }
    }
    let log_mean = |vs: &[usize]| {
        let m = vs.iter().map(|&v| f[v]).fold(f64::NEG_INFINITY, f64::max);
        m + (vs.iter().map(|&v| (f[v] - m).exp()).sum::<f64>() / vs.len() as f64).ln()
    };
    let [_, m1, m2] = dec.dims();
    let mut log_edge = vec![0.0; m1];
    let mut log_face = vec![0.0; m2];
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (dec.vertex(i, j), dec.vertex(i + 1, j), dec.vertex(i, j + 1), dec.vertex(i + 1, j + 1));
            log_edge[dec.x_edge(i, j)] = log_mean(&[v00, v10]);
            log_edge[dec.y_edge(i, j)] = log_mean(&[v00, v01]);
            log_face[v00] = log_mean(&[v00, v10, v01, v11]);
        }
    }
    let (d0, d1) = incidence(dec, [t * a[0] * h, t * a[1] * h], |deg, (r, c)| {
        if deg == 0 {
            (f[c] - log_edge[r]).exp()
        } else {
            (log_edge[c] - log_face[r]).exp()
        }
    });
    let d = [scaled(&d0, 1.0 / h), scaled(&d1, 1.0 / h)];
    let laplacians = hodge_laplacians(&d[0], &d[1]);

    let lin = linear_differentials(dec, omega, 1.0)?;
    let base = [scaled(&dec.d0, 1.0 / h), scaled(&dec.d1, 1.0 / h)];
    let w = [Csr::lin_comb(1.0, &lin[0], -1.0, &base[0]), Csr::lin_comb(1.0, &lin[1], -1.0, &base[1])];
    let sym = |x: &Csr, y: &Csr| Csr::lin_comb(1.0, &x.matmul(y), 1.0, &y.transpose().matmul(&x.transpose()));
    let (bt, wt) = ([base[0].transpose(), base[1].transpose()], [w[0].transpose(), w[1].transpose()]);
    let a_k = [
        sym(&bt[0], &w[0]),
        Csr::lin_comb(1.0, &sym(&base[0], &wt[0]), 1.0, &sym(&bt[1], &w[1])),
        sym(&base[1], &wt[1]),
    ];
    let b_k = hodge_laplacians(&w[0], &w[1]);
    Ok(WittenOperator { t, n, d, laplacians, a: a_k, b: b_k })
}
