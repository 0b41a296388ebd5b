use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exponents closer than this are merged.
pub const EXPONENT_TOL: f64 = 1e-9;
const MIN_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub exponent: f64,
    pub coefficient: f64,
}

/// Σ cᵢ e^{−zλᵢ}, truncated: complete for |λ| ≤ `complete_to`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletSeries {
    pub terms: Vec<Term>,
    pub complete_to: f64,
    /// The full series is known to be this finite sum.
    pub exhaustive: bool,
}

impl DirichletSeries {
    pub fn zero(complete_to: f64) -> DirichletSeries {
        DirichletSeries { terms: Vec::new(), complete_to, exhaustive: true }
    }

    /// Aggregates equal exponents (within `EXPONENT_TOL`) and sorts by exponent.
    pub fn from_terms(mut raw: Vec<Term>, complete_to: f64, exhaustive: bool) -> DirichletSeries {
        raw.sort_by(|a, b| a.exponent.partial_cmp(&b.exponent).unwrap());
        let mut terms: Vec<Term> = Vec::new();
        for t in raw {
            match terms.last_mut() {
                Some(last) if (t.exponent - last.exponent).abs() <= EXPONENT_TOL => last.coefficient += t.coefficient,
                _ => terms.push(t),
            }
        }
        DirichletSeries { terms, complete_to, exhaustive }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }

    /// Σ cᵢ e^{−zλᵢ}, Kahan-summed in ascending |λ|.
    pub fn eval(&self, z: Complex<f64>) -> Complex<f64> {
        let mut order: Vec<&Term> = self.terms.iter().collect();
        order.sort_by(|a, b| a.exponent.abs().partial_cmp(&b.exponent.abs()).unwrap());
        let (mut re, mut im) = (Kahan::default(), Kahan::default());
        for t in order {
            let v = (-z * t.exponent).exp() * t.coefficient;
            re.add(v.re);
            im.add(v.im);
        }
        Complex::new(re.sum, im.sum)
    }

    pub fn eval_real(&self, z: f64) -> f64 {
        self.eval(Complex::new(z, 0.0)).re
    }

    /// The series for ω + dh between rest points u → v: every exponent moves by h(v) − h(u).
    pub fn gauge_shifted(&self, h_u: f64, h_v: f64) -> DirichletSeries {
        let d = h_v - h_u;
        DirichletSeries {
            terms: self.terms.iter().map(|t| Term { exponent: t.exponent + d, coefficient: t.coefficient }).collect(),
            complete_to: self.complete_to,
            exhaustive: self.exhaustive,
        }
    }

    /// Product of two series; the result is complete up to the smaller remaining margin.
    pub fn convolve(&self, other: &DirichletSeries) -> DirichletSeries {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                raw.push(Term { exponent: a.exponent + b.exponent, coefficient: a.coefficient * b.coefficient });
            }
        }
        let ma = self.terms.iter().map(|t| t.exponent.abs()).fold(0.0, f64::max);
        let mb = other.terms.iter().map(|t| t.exponent.abs()).fold(0.0, f64::max);
        let complete = (self.complete_to - mb).min(other.complete_to - ma);
        DirichletSeries::from_terms(raw, complete, self.exhaustive && other.exhaustive)
    }

    pub fn add(&self, other: &DirichletSeries) -> DirichletSeries {
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().copied());
        DirichletSeries::from_terms(raw, self.complete_to.min(other.complete_to), self.exhaustive && other.exhaustive)
    }
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbscissaEstimate {
    /// −∞ for a finite (entire) series.
    pub value: f64,
    pub entire: bool,
    pub terms_used: usize,
    pub caveat: &'static str,
}

/// Heuristic abscissa of convergence in the variable paired with |λ|:
/// max over the last half of partial sums of log(Σ|c|)/|λ_N|, or the tail-sum
/// version when that is not positive.
pub fn abscissa_estimate(series: &DirichletSeries) -> Result<AbscissaEstimate> {
    let caveat = "estimated from a truncated series; not a proof";
    if series.exhaustive {
        return Ok(AbscissaEstimate { value: f64::NEG_INFINITY, entire: true, terms_used: series.terms.len(), caveat });
    }
    let mut terms: Vec<(f64, f64)> = series
        .terms
        .iter()
        .filter(|t| t.coefficient != 0.0)
        .map(|t| (t.exponent.abs(), t.coefficient.abs()))
        .collect();
    terms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if terms.len() < MIN_TERMS {
        return Err(Error::TooFewTerms { found: terms.len(), needed: MIN_TERMS });
    }
    let n = terms.len();
    let mut partial = 0.0;
    let mut best = f64::NEG_INFINITY;
    for (i, &(lam, c)) in terms.iter().enumerate() {
        partial += c;
        if i >= n / 2 && lam > 0.0 {
            best = best.max(partial.ln() / lam);
        }
    }
    if best <= 0.0 {
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + terms[i].1;
        }
        let mut tail_best = f64::NEG_INFINITY;
        for (i, &(lam, _)) in terms.iter().enumerate().take(n - 1) {
            let tail = suffix[i + 1];
            if i >= n / 2 && lam > 0.0 && tail > 0.0 {
                tail_best = tail_best.max(tail.ln() / lam);
            }
        }
        if tail_best.is_finite() {
            best = tail_best;
        }
    }
    Ok(AbscissaEstimate { value: best, entire: false, terms_used: n, caveat })
}
