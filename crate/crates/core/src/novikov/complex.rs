use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::counting::{build_instanton_counting, InstantonCounting};
use super::series::DirichletSeries;
use crate::error::{Error, Result};
use crate::flow::RestPoint;
use crate::instanton::{find_instantons, Instanton, SearchOptions};
use crate::system::FieldSystem;
use crate::torus::HomotopyClass;

/// Cochains are functions on rest points; δᵏ maps Cᵏ → Cᵏ⁺¹ with
/// (δf)(u) = Σ_{v ∈ 𝒳_k} I_{u,v} f(v), u ∈ 𝒳_{k+1}.
#[derive(Debug, Clone, Serialize)]
pub struct NovikovComplex {
    /// Rest-point indices of each Morse index, in rest-point order.
    pub cells: Vec<Vec<usize>>,
    pub n_k: Vec<usize>,
    pub counts: Vec<InstantonCounting>,
    pub cutoff: f64,
}

impl NovikovComplex {
    pub fn dim(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn counting(&self, u: usize, v: usize) -> Option<&InstantonCounting> {
        self.counts.iter().find(|c| c.from == u && c.to == v)
    }

    /// δᵏ as an n_{k+1} × n_k matrix of series.
    pub fn differential(&self, k: usize) -> Vec<Vec<DirichletSeries>> {
        self.cells[k + 1]
            .iter()
            .map(|&u| {
                self.cells[k]
                    .iter()
                    .map(|&v| self.counting(u, v).map_or(DirichletSeries::zero(self.cutoff), |c| c.laplace()))
                    .collect()
            })
            .collect()
    }

    /// δᵏ evaluated at real z.
    pub fn delta_at(&self, k: usize, z: f64) -> DMatrix<f64> {
        let d = self.differential(k);
        DMatrix::from_fn(self.n_k[k + 1], self.n_k[k], |r, c| d[r][c].eval_real(z))
    }

    /// Largest |ω(α)| over all entries.
    pub fn max_exponent(&self) -> f64 {
        self.counts
            .iter()
            .flat_map(|c| c.entries.iter().map(|e| e.exponent.abs()))
            .fold(0.0, f64::max)
    }

    fn exhaustive(&self) -> bool {
        self.counts.iter().all(|c| c.exhaustive)
    }
}

/// Assembles the complex from counting functions; every adjacent pair must be present.
pub fn assemble_complex(n: usize, rest_points: &[RestPoint], counts: Vec<InstantonCounting>, cutoff: f64) -> Result<NovikovComplex> {
    let mut cells = vec![Vec::new(); n + 1];
    for (i, r) in rest_points.iter().enumerate() {
        cells[r.morse_index].push(i);
    }
    for k in 0..n {
        for &u in &cells[k + 1] {
            for &v in &cells[k] {
                if !counts.iter().any(|c| c.from == u && c.to == v) {
                    return Err(Error::MissingPair { from: u, to: v });
                }
            }
        }
    }
    let n_k = cells.iter().map(|c| c.len()).collect();
    Ok(NovikovComplex { cells, n_k, counts, cutoff })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexRun {
    pub complex: NovikovComplex,
    pub instantons: Vec<Instanton>,
    /// Every search settled all its rays.
    pub complete: bool,
}

/// Searches all adjacent pairs and assembles the complex.
pub fn compute_complex(sys: &FieldSystem, rest_points: &[RestPoint], cutoff: f64, opts: &SearchOptions) -> Result<ComplexRun> {
    let exhaustive = sys.omega.harmonic.iter().all(|&a| a == 0.0);
    let opts = SearchOptions { cutoff, ..*opts };
    let mut counts = Vec::new();
    let mut all = Vec::new();
    let mut complete = true;
    for (u, ru) in rest_points.iter().enumerate() {
        for (v, rv) in rest_points.iter().enumerate() {
            if ru.morse_index != rv.morse_index + 1 {
                continue;
            }
            let found = find_instantons(sys, rest_points, u, v, &opts)?;
            complete &= found.complete;
            counts.push(build_instanton_counting(u, v, &found.instantons, cutoff, exhaustive));
            all.extend(found.instantons);
        }
    }
    let complex = assemble_complex(sys.dim(), rest_points, counts, cutoff)?;
    Ok(ComplexRun { complex, instantons: all, complete })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct D2Violation {
    pub from: usize,
    pub to: usize,
    /// None for exponent-aggregated (series-level) coefficients.
    pub class: Option<HomotopyClass>,
    pub exponent: f64,
    pub coefficient: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct D2Report {
    pub r_eff: f64,
    pub pairs_checked: usize,
    pub coefficients_checked: usize,
    pub violations: Vec<D2Violation>,
    pub passed: bool,
}

/// Σ_v I_{u,v}·I_{v,w} for every index gap of two, compared with zero exactly,
/// both per homotopy class and after aggregating equal exponents.
pub fn check_delta_squared(cx: &NovikovComplex) -> D2Report {
    let r_eff = if cx.exhaustive() { f64::INFINITY } else { cx.cutoff - cx.max_exponent() };
    let mut report = D2Report { r_eff, pairs_checked: 0, coefficients_checked: 0, violations: Vec::new(), passed: true };
    for k in 0..cx.dim().saturating_sub(1) {
        for &u in &cx.cells[k + 2] {
            for &w in &cx.cells[k] {
                report.pairs_checked += 1;
                let mut classes: BTreeMap<HomotopyClass, (i64, f64)> = BTreeMap::new();
                for &v in &cx.cells[k + 1] {
                    let (Some(a), Some(b)) = (cx.counting(u, v), cx.counting(v, w)) else { continue };
                    for ea in &a.entries {
                        for eb in &b.entries {
                            let e = classes.entry(&ea.class + &eb.class).or_insert((0, ea.exponent + eb.exponent));
                            e.0 += ea.count * eb.count;
                        }
                    }
                }
                let mut by_exponent: Vec<(f64, i64)> = Vec::new();
                for (class, (c, lam)) in &classes {
                    if lam.abs() > r_eff {
                        continue;
                    }
                    report.coefficients_checked += 1;
                    if *c != 0 {
                        report.violations.push(D2Violation { from: u, to: w, class: Some(class.clone()), exponent: *lam, coefficient: *c });
                    }
                    match by_exponent.iter_mut().find(|(l, _)| (l - lam).abs() <= super::series::EXPONENT_TOL) {
                        Some(e) => e.1 += c,
                        None => by_exponent.push((*lam, *c)),
                    }
                }
                for (lam, c) in by_exponent {
                    if c != 0 {
                        report.violations.push(D2Violation { from: u, to: w, class: None, exponent: lam, coefficient: c });
                    }
                }
            }
        }
    }
    report.passed = report.violations.is_empty();
    report
}
