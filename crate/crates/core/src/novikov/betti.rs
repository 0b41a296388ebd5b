use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BettiTable {
    pub xi: Vec<f64>,
    pub t: f64,
    pub betti: Vec<usize>,
    /// Near-kernel dimensions of the discrete Witten Laplacian, when computed.
    pub spectral: Option<Vec<usize>>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// dim Hᵠ(Tⁿ; d + tξ∧): C(n, q) when tξ = 0, else 0.
pub fn closed_form_betti(xi: &[f64], t: f64) -> Vec<usize> {
    let n = xi.len();
    let trivial = t == 0.0 || xi.iter().all(|&a| a == 0.0);
    (0..=n).map(|q| if trivial { binomial(n, q) } else { 0 }).collect()
}

/// Closed form, cross-checked against a spectral count when one is supplied.
pub fn betti_table(xi: &[f64], t: f64, spectral: Option<Vec<usize>>) -> Result<BettiTable> {
    if t == 0.0 && xi.iter().any(|&a| a != 0.0) {
        return Err(Error::InvalidParameter("t must be nonzero for a nonzero class".into()));
    }
    let betti = closed_form_betti(xi, t);
    if let Some(s) = &spectral {
        if s != &betti {
            return Err(Error::BettiMismatch { closed: betti, spectral: s.clone() });
        }
    }
    Ok(BettiTable { xi: xi.to_vec(), t, betti, spectral })
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityLine {
    pub r: usize,
    /// Σ_{k≤r} (−1)^{r−k} n_k
    pub lhs: i64,
    /// Σ_{k≤r} (−1)^{r−k} β_k
    pub rhs: i64,
    pub holds: bool,
    pub equality: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub n_k: Vec<usize>,
    pub betti: Vec<usize>,
    pub weak: Vec<bool>,
    pub strong: Vec<InequalityLine>,
    /// Σ(−1)^k n_k = Σ(−1)^q β_q.
    pub euler_equal: bool,
    pub all_hold: bool,
}

pub fn novikov_inequalities(n_k: &[usize], betti: &[usize]) -> InequalityReport {
    let weak: Vec<bool> = n_k.iter().zip(betti).map(|(n, b)| n >= b).collect();
    let sign = |r: usize, k: usize| if (r - k) % 2 == 0 { 1i64 } else { -1 };
    let strong: Vec<InequalityLine> = (0..n_k.len())
        .map(|r| {
            let lhs: i64 = (0..=r).map(|k| sign(r, k) * n_k[k] as i64).sum();
            let rhs: i64 = (0..=r).map(|k| sign(r, k) * betti[k] as i64).sum();
            InequalityLine { r, lhs, rhs, holds: lhs >= rhs, equality: lhs == rhs }
        })
        .collect();
    let chi = |v: &[usize]| v.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
    let all_hold = weak.iter().all(|&w| w) && strong.iter().all(|l| l.holds);
    InequalityReport {
        n_k: n_k.to_vec(),
        betti: betti.to_vec(),
        euler_equal: chi(n_k) == chi(betti),
        weak,
        strong,
        all_hold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_betti(&[0.0, 0.0], 1.0), vec![1, 2, 1]);
        assert_eq!(closed_form_betti(&[1.0, 0.0], 5.0), vec![0, 0, 0]);
        assert_eq!(closed_form_betti(&[0.0, 0.0, 0.0], 2.0), vec![1, 3, 3, 1]);
    }

    #[test]
    fn gradient_counts_are_sharp() {
        let rep = novikov_inequalities(&[1, 2, 1], &[1, 2, 1]);
        assert!(rep.all_hold && rep.euler_equal);
        assert!(rep.strong.iter().all(|l| l.equality));
    }

    #[test]
    fn mismatch_is_an_error() {
        assert!(matches!(betti_table(&[0.0, 0.0], 1.0, Some(vec![1, 1, 1])), Err(Error::BettiMismatch { .. })));
    }
}
