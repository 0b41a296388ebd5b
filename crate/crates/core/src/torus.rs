//! The flat torus Tⁿ = ℝⁿ/ℤⁿ, closed one-forms on it and homotopy classes.
//!
//! Both path classes between two points and free loop classes are identified
//! with ℤⁿ (π₁ is abelian and free), so a [`HomotopyClass`] is a winding vector.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{eval_grad, Expr, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusDomain {
    pub dim: usize,
}

impl TorusDomain {
    pub fn new(dim: usize) -> Result<TorusDomain> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "torus dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        Ok(TorusDomain { dim })
    }

    /// Reduces every coordinate into [0, 1).
    pub fn reduce(&self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|&x| reduce_coord(x)).collect()
    }

    /// Flat distance on the torus.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        torus_displacement(p, q).iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

pub fn reduce_coord(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Shortest displacement q − p modulo ℤⁿ, each entry in [−½, ½].
pub fn torus_displacement(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let d = b - a;
            d - d.round()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HomotopyClass(pub Vec<i64>);

impl HomotopyClass {
    pub fn zero(n: usize) -> HomotopyClass {
        HomotopyClass(vec![0; n])
    }

    /// Rounds a real lift displacement to the nearest integer vector.
    pub fn from_displacement(d: &[f64]) -> HomotopyClass {
        HomotopyClass(d.iter().map(|x| x.round() as i64).collect())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&k| k as f64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl Add for &HomotopyClass {
    type Output = HomotopyClass;
    fn add(self, o: &HomotopyClass) -> HomotopyClass {
        HomotopyClass(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &HomotopyClass {
    type Output = HomotopyClass;
    fn sub(self, o: &HomotopyClass) -> HomotopyClass {
        HomotopyClass(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &HomotopyClass {
    type Output = HomotopyClass;
    fn neg(self) -> HomotopyClass {
        HomotopyClass(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul<i64> for &HomotopyClass {
    type Output = HomotopyClass;
    fn mul(self, k: i64) -> HomotopyClass {
        HomotopyClass(self.0.iter().map(|a| a * k).collect())
    }
}

/// ω = Σ aᵢ dxᵢ + dF with constant harmonic part `a` and periodic potential F.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedOneForm {
    pub harmonic: Vec<f64>,
    pub potential: Expr,
}

impl ClosedOneForm {
    pub fn new(harmonic: Vec<f64>, potential: Expr) -> ClosedOneForm {
        ClosedOneForm { harmonic, potential }
    }

    pub fn harmonic(harmonic: Vec<f64>) -> ClosedOneForm {
        ClosedOneForm { harmonic, potential: Expr::zero() }
    }

    pub fn exact(dim: usize, potential: Expr) -> ClosedOneForm {
        ClosedOneForm { harmonic: vec![0.0; dim], potential }
    }

    pub fn dim(&self) -> usize {
        self.harmonic.len()
    }

    /// The cohomology class [ω] in the basis dx₁..dxₙ.
    pub fn cohomology_class(&self) -> &[f64] {
        &self.harmonic
    }

    pub fn potential_at(&self, p: &[f64]) -> Result<f64> {
        self.potential.eval(p)
    }

    /// Components of ω at `p`.
    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        let j = eval_grad(&self.potential, p)?;
        Ok(self
            .harmonic
            .iter()
            .enumerate()
            .map(|(i, a)| a + j.g[i])
            .collect())
    }

    /// ω(v) at `p`.
    pub fn apply(&self, p: &[f64], v: &[f64]) -> Result<f64> {
        Ok(self.at(p)?.iter().zip(v).map(|(w, x)| w * x).sum())
    }

    /// ∫ω along any path from lift `start` to lift `end` in ℝⁿ.
    pub fn integral_between_lifts(&self, start: &[f64], end: &[f64]) -> Result<f64> {
        let harmonic: f64 = self
            .harmonic
            .iter()
            .zip(start.iter().zip(end))
            .map(|(a, (s, e))| a * (e - s))
            .sum();
        Ok(harmonic + self.potential.eval(end)? - self.potential.eval(start)?)
    }

    /// Adds an exact term dh.
    pub fn plus_exact(&self, h: Expr) -> ClosedOneForm {
        ClosedOneForm {
            harmonic: self.harmonic.clone(),
            potential: Expr::Add(Box::new(self.potential.clone()), Box::new(h)),
        }
    }

    pub fn scaled(&self, s: f64) -> ClosedOneForm {
        ClosedOneForm {
            harmonic: self.harmonic.iter().map(|a| a * s).collect(),
            potential: Expr::Mul(Box::new(Expr::Num(s)), Box::new(self.potential.clone())),
        }
    }
}

/// ξ(γ) = ∫_γ ω for a free loop class: only the harmonic part contributes.
pub fn pair_form_class(omega: &ClosedOneForm, gamma: &HomotopyClass) -> Result<f64> {
    if omega.dim() != gamma.0.len() {
        return Err(Error::Dimension {
            expected: omega.dim(),
            found: gamma.0.len(),
        });
    }
    Ok(omega
        .harmonic
        .iter()
        .zip(&gamma.0)
        .map(|(a, &k)| a * k as f64)
        .sum())
}

/// Unwraps a sampled torus curve into ℝⁿ, starting from the first sample.
pub fn lift_path(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        match out.last() {
            None => out.push(s.clone()),
            Some(prev) => {
                let prev_sample = &samples[i - 1];
                let mut next = Vec::with_capacity(s.len());
                for k in 0..s.len() {
                    let raw = s[k] - prev_sample[k];
                    let d = raw - raw.round();
                    if d.abs() >= 0.5 - 1e-12 {
                        return Err(Error::LiftAmbiguity { index: i - 1, jump: d.abs() });
                    }
                    next.push(prev[k] + d);
                }
                out.push(next);
            }
        }
    }
    Ok(out)
}

/// ω(α) for the class of a sampled path, with the lift tracked incrementally.
pub fn path_omega_integral(omega: &ClosedOneForm, samples: &[Vec<f64>]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let lifted = lift_path(samples)?;
    omega.integral_between_lifts(&lifted[0], lifted.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn pairing_examples() {
        let w = HomotopyClass(vec![3, -2]);
        assert_eq!(pair_form_class(&ClosedOneForm::harmonic(vec![1.0, 0.0]), &w).unwrap(), 3.0);
        assert_eq!(pair_form_class(&ClosedOneForm::harmonic(vec![0.0, 0.0]), &w).unwrap(), 0.0);
        let v = HomotopyClass(vec![2, 2]);
        assert_eq!(pair_form_class(&ClosedOneForm::harmonic(vec![0.5, 1.25]), &v).unwrap(), 3.5);
    }

    #[test]
    fn unit_period_segment() {
        let omega = ClosedOneForm::harmonic(vec![1.0, 0.0]);
        let path: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0, 0.0]).collect();
        assert!((path_omega_integral(&omega, &path).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_form_on_loop_vanishes() {
        let omega = ClosedOneForm::exact(2, parse("cosp(x1)*sinp(x2) + 0.3*sinp(x1)").unwrap());
        let path: Vec<Vec<f64>> = (0..=200)
            .map(|i| {
                let s = i as f64 / 200.0;
                vec![reduce_coord(2.0 * s + 0.1), reduce_coord(0.3 * (std::f64::consts::TAU * s).sin() - s)]
            })
            .collect();
        assert!(path_omega_integral(&omega, &path).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mixed_form_on_lifted_path() {
        let omega = ClosedOneForm::new(vec![2.0, 0.0], parse("0.1*sinp(x2)").unwrap());
        let path: Vec<Vec<f64>> = (0..=30)
            .map(|i| {
                let s = i as f64 / 30.0;
                vec![1.5 * s, 0.25 * s]
            })
            .collect();
        assert!((path_omega_integral(&omega, &path).unwrap() - 3.1).abs() < 1e-12);
    }

    #[test]
    fn jump_of_half_is_ambiguous() {
        let path = vec![vec![0.0, 0.0], vec![0.5, 0.0]];
        assert!(matches!(
            path_omega_integral(&ClosedOneForm::harmonic(vec![1.0, 0.0]), &path),
            Err(Error::LiftAmbiguity { .. })
        ));
    }

    #[test]
    fn reduction_stays_in_unit_interval() {
        assert_eq!(reduce_coord(-1e-18), 0.0);
        assert_eq!(reduce_coord(1.0), 0.0);
        assert!((reduce_coord(-0.25) - 0.75).abs() < 1e-15);
    }
}
