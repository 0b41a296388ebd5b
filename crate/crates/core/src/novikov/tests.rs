use super::*;
use crate::flow::{find_rest_points, RestPoint};
use crate::instanton::SearchOptions;
use crate::orbit::{find_closed_orbits, OrbitOptions};
use crate::system::FieldSystem;
use crate::torus::HomotopyClass;
use num_rational::Ratio;

const GRADIENT: &str = "dim = 2\nfield.1 = 2*pi*sinp(x1)\nfield.2 = 2*pi*sinp(x2)\nomega.potential = cosp(x1) + cosp(x2)\n";
const TILTED: &str = "dim = 2\nfield.1 = sinp(x1) - 0.5\nfield.2 = sinp(x2)\nomega.harmonic = 0.5, 0\nomega.potential = (cosp(x1) + cosp(x2))/(2*pi)\n";

fn run(text: &str, cutoff: f64) -> (FieldSystem, Vec<RestPoint>, ComplexRun) {
    let sys = FieldSystem::from_str_named("t", text).unwrap();
    let rp = find_rest_points(&sys).unwrap();
    let cx = compute_complex(&sys, &rp, cutoff, &SearchOptions::default()).unwrap();
    (sys, rp, cx)
}

#[test]
fn gradient_complex_vanishes() {
    let (_, _, run) = run(GRADIENT, f64::INFINITY);
    let cx = &run.complex;
    assert_eq!(cx.n_k, vec![1, 2, 1]);
    for k in 0..2 {
        for row in cx.differential(k) {
            for s in row {
                assert!(s.is_zero() && s.exhaustive);
            }
        }
    }
    let rep = check_delta_squared(cx);
    assert!(rep.passed && rep.pairs_checked == 1 && rep.r_eff.is_infinite());
}

#[test]
fn opposite_pairs_cancel_only_within_a_class() {
    let (_, _, run) = run(GRADIENT, f64::INFINITY);
    // saddle → minimum: two instantons in different classes give entries ±1
    let c = run.complex.counts.iter().find(|c| c.entries.len() == 2 && c.entries.iter().all(|e| e.count.abs() == 1)).unwrap();
    assert_eq!(c.entries.iter().map(|e| e.count).sum::<i64>(), 0);
    // merging both into one class cancels
    let mut merged = run.instantons.iter().filter(|i| i.from == c.from && i.to == c.to).cloned().collect::<Vec<_>>();
    for i in merged.iter_mut() {
        i.winding = HomotopyClass::zero(2);
    }
    let m = build_instanton_counting(c.from, c.to, &merged, f64::INFINITY, true);
    assert_eq!(m.entries.len(), 1);
    assert_eq!(m.entries[0].count, 0);
}

#[test]
fn tilted_delta_squared_and_mutation() {
    let (_, _, run) = run(TILTED, 5.0);
    let rep = check_delta_squared(&run.complex);
    assert!(rep.passed, "{:?}", rep.violations);
    assert!(rep.coefficients_checked > 0);
    // flip any single sign: δ² must break
    for ci in 0..run.complex.counts.len() {
        for ei in 0..run.complex.counts[ci].entries.len() {
            let mut cx = run.complex.clone();
            let e = &mut cx.counts[ci].entries[ei];
            e.count = -e.count;
            assert!(!check_delta_squared(&cx).passed);
        }
    }
}

#[test]
fn gauge_covariance_is_termwise() {
    let (sys, rp, run0) = run(TILTED, f64::INFINITY);
    let h = crate::expr::parse("0.3*sinp(x1 + x2) - 0.2*cosp(x2)").unwrap();
    let shifted = FieldSystem::new("s", sys.field.clone(), sys.omega.plus_exact(h.clone()), None).unwrap();
    let run1 = compute_complex(&shifted, &rp, f64::INFINITY, &SearchOptions::default()).unwrap();
    for c0 in &run0.complex.counts {
        let c1 = run1.complex.counting(c0.from, c0.to).unwrap();
        let hu = h.eval(&rp[c0.from].position).unwrap();
        let hv = h.eval(&rp[c0.to].position).unwrap();
        let expect = c0.laplace().gauge_shifted(hu, hv);
        let got = c1.laplace();
        assert_eq!(expect.terms.len(), got.terms.len());
        for (a, b) in expect.terms.iter().zip(&got.terms) {
            assert!((a.exponent - b.exponent).abs() < 1e-12 && a.coefficient == b.coefficient);
        }
    }
}

#[test]
fn empty_and_missing() {
    let sys = FieldSystem::from_str_named("t", "dim = 2\nfield.1 = 1\nfield.2 = sinp(x2)\nomega.harmonic = -1, 0\n").unwrap();
    let rp = find_rest_points(&sys).unwrap();
    let cx = compute_complex(&sys, &rp, 3.0, &SearchOptions::default()).unwrap().complex;
    assert_eq!(cx.n_k, vec![0, 0, 0]);
    assert!(check_delta_squared(&cx).passed);
    let (_, rp, run) = run(GRADIENT, f64::INFINITY);
    let partial: Vec<_> = run.complex.counts.iter().skip(1).cloned().collect();
    assert!(matches!(assemble_complex(2, &rp, partial, 1.0), Err(crate::Error::MissingPair { .. })));
}

#[test]
fn orbit_counting_for_two_orbits() {
    let sys = FieldSystem::from_str_named("t", "dim = 2\nfield.1 = 1\nfield.2 = sinp(x2)\nomega.harmonic = 1, 0\n").unwrap();
    let res = find_closed_orbits(&sys, &OrbitOptions { cutoff: 5.0, ..OrbitOptions::default() }).unwrap();
    let z = build_orbit_counting(&res.orbits, 5.0, false);
    assert!(z.entries.iter().all(|e| e.value == Ratio::from_integer(0)));
    assert_eq!(serde_json::to_value(&z.entries[0]).unwrap()["value"], "0/1");
}

#[test]
fn attracting_orbit_zeta_function() {
    let sys = FieldSystem::from_str_named("t", "dim = 2\nfield.1 = 1 + sinp(x1)*(1 + cosp(x2))\nfield.2 = sinp(x2)\nomega.harmonic = 1, 0\n").unwrap();
    let res = find_closed_orbits(&sys, &OrbitOptions { cutoff: 30.0, ..OrbitOptions::default() }).unwrap();
    let z = build_orbit_counting(&res.orbits, 30.0, false).laplace();
    assert_eq!(z.terms.len(), 30);
    assert!((z.eval_real(2.0) - (1.0 - (-2.0f64).exp()).ln()).abs() < 1e-12);
}
