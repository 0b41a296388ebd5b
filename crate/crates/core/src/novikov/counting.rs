use num_rational::Ratio;
use serde::{Serialize, Serializer};

use super::series::{DirichletSeries, Term};
use crate::instanton::Instanton;
use crate::orbit::ClosedOrbit;
use crate::torus::HomotopyClass;

fn ratio_string<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstantonEntry {
    pub class: HomotopyClass,
    pub count: i64,
    /// ω(α) for the class.
    pub exponent: f64,
}

/// 𝓘_{x,y}: signed instanton counts by class, complete for |ω(α)| ≤ cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct InstantonCounting {
    pub from: usize,
    pub to: usize,
    pub entries: Vec<InstantonEntry>,
    pub cutoff: f64,
    /// No further instantons exist beyond the entries (ω exact).
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitEntry {
    pub class: HomotopyClass,
    #[serde(serialize_with = "ratio_string")]
    pub value: Ratio<i64>,
    /// ξ(γ).
    pub exponent: f64,
}

/// 𝓩: Σ ε/p by free homotopy class.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitCounting {
    pub entries: Vec<OrbitEntry>,
    pub cutoff: f64,
    pub exhaustive: bool,
}

pub fn build_instanton_counting(from: usize, to: usize, instantons: &[Instanton], cutoff: f64, exhaustive: bool) -> InstantonCounting {
    let mut entries: Vec<InstantonEntry> = Vec::new();
    for i in instantons.iter().filter(|i| i.from == from && i.to == to && i.omega_value.abs() <= cutoff) {
        match entries.iter_mut().find(|e| e.class == i.winding) {
            Some(e) => e.count += i.sign as i64,
            None => entries.push(InstantonEntry { class: i.winding.clone(), count: i.sign as i64, exponent: i.omega_value }),
        }
    }
    entries.sort_by(|a, b| a.class.cmp(&b.class));
    InstantonCounting { from, to, entries, cutoff, exhaustive }
}

pub fn build_orbit_counting(orbits: &[ClosedOrbit], cutoff: f64, exhaustive: bool) -> OrbitCounting {
    let mut entries: Vec<OrbitEntry> = Vec::new();
    for o in orbits.iter().filter(|o| o.nondegenerate && o.xi_value.abs() <= cutoff) {
        let v = Ratio::new(o.epsilon as i64, o.period as i64);
        match entries.iter_mut().find(|e| e.class == o.winding) {
            Some(e) => e.value += v,
            None => entries.push(OrbitEntry { class: o.winding.clone(), value: v, exponent: o.xi_value }),
        }
    }
    entries.sort_by(|a, b| a.class.cmp(&b.class));
    OrbitCounting { entries, cutoff, exhaustive }
}

impl InstantonCounting {
    pub fn count(&self, class: &HomotopyClass) -> i64 {
        self.entries.iter().find(|e| &e.class == class).map_or(0, |e| e.count)
    }

    /// I(z) = Σ 𝓘(α) e^{−zω(α)}.
    pub fn laplace(&self) -> DirichletSeries {
        DirichletSeries::from_terms(
            self.entries.iter().map(|e| Term { exponent: e.exponent, coefficient: e.count as f64 }).collect(),
            self.cutoff,
            self.exhaustive,
        )
    }
}

impl OrbitCounting {
    pub fn value(&self, class: &HomotopyClass) -> Ratio<i64> {
        self.entries.iter().find(|e| &e.class == class).map_or(Ratio::from_integer(0), |e| e.value)
    }

    /// Z(z) = Σ 𝓩(γ) e^{−zξ(γ)}.
    pub fn laplace(&self) -> DirichletSeries {
        DirichletSeries::from_terms(
            self.entries
                .iter()
                .map(|e| Term { exponent: e.exponent, coefficient: *e.value.numer() as f64 / *e.value.denom() as f64 })
                .collect(),
            self.cutoff,
            self.exhaustive,
        )
    }

    /// Z^{ξ₁.ξ₂}(z) = Σ 𝓩(γ) e^{−(ξ₁ + zξ₂)(γ)} with ξ₂ the class the counting was built for.
    pub fn eval_twisted(&self, xi1: &[f64], z: nalgebra::Complex<f64>) -> nalgebra::Complex<f64> {
        self.entries
            .iter()
            .map(|e| {
                let x1: f64 = xi1.iter().zip(&e.class.0).map(|(a, &k)| a * k as f64).sum();
                let c = *e.value.numer() as f64 / *e.value.denom() as f64;
                (-(z * e.exponent) - x1).exp() * c
            })
            .sum()
    }
}
