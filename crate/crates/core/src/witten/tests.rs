use super::*;
use crate::system::FieldSystem;
use crate::torus::ClosedOneForm;

pub(super) const GRADIENT: &str = "dim = 2\nfield.1 = 2*pi*sinp(x1)\nfield.2 = 2*pi*sinp(x2)\nomega.potential = cosp(x1) + cosp(x2)\n";

pub(super) fn sys(text: &str) -> FieldSystem {
    FieldSystem::from_str_named("t", text).unwrap()
}

fn form(harmonic: &str, potential: &str) -> ClosedOneForm {
    let text = format!("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = {harmonic}\nomega.potential = {potential}\n");
    sys(&text).omega
}

#[test]
fn grid_combinatorics() {
    let dec = build_dec(8).unwrap();
    assert_eq!(dec.dims(), [64, 128, 64]);
    assert!(dec.d0.mul_vec(&[1.0; 64]).iter().all(|&v| v == 0.0));
    assert!(dec.d1.matmul(&dec.d0).values.iter().all(|&v| v == 0.0));
    assert!(build_dec(7).is_err());
}

#[test]
fn harmonic_one_forms() {
    let dec = build_dec(8).unwrap();
    let w = witten_operator(&dec, &form("0, 0", "0"), 0.0).unwrap();
    let (vals, _) = eigen::dense_eigenpairs(&w.laplacians[1].to_dense());
    let kernel = vals.iter().filter(|&&v| v.abs() < 1e-9).count();
    assert_eq!(kernel, 2);
    assert!(vals[2] > 0.1);
}

#[test]
fn constant_function_under_dx1() {
    let dec = build_dec(16).unwrap();
    let w = witten_operator(&dec, &form("1, 0", "0"), 1.0).unwrap();
    let f = w.laplacians[0].mul_vec(&vec![1.0; 256]);
    assert!(f.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn exact_complex_for_nonconstant_form() {
    let dec = build_dec(12).unwrap();
    let w = witten_operator(&dec, &form("0.5, -0.25", "sinp(x1)*cosp(x2)"), 7.0).unwrap();
    let dd = w.d[1].matmul(&w.d[0]);
    let scale = w.d[1].norm_inf() * w.d[0].norm_inf();
    assert!(dd.values.iter().all(|v| v.abs() < 1e-13 * scale));
    for lap in &w.laplacians {
        assert!(lap.max_abs_diff(&lap.transpose()) < 1e-12 * lap.norm_inf());
        let (vals, _) = eigen::dense_eigenpairs(&lap.to_dense());
        assert!(vals[0] > -1e-10 * lap.norm_inf());
    }
}

#[test]
fn polynomial_dependence_on_t() {
    let dec = build_dec(10).unwrap();
    let om = form("0.3, 0", "cosp(x1) + 0.5*sinp(x2)");
    let w = witten_operator(&dec, &om, 2.0).unwrap();
    for s in [0.0, 1.5, 4.0] {
        let model = w.linear_model(&dec, s);
        let d = dec::linear_differentials(&dec, &om, s).unwrap();
        let direct = dec::hodge_laplacians(&d[0], &d[1]);
        for k in 0..3 {
            assert!(model[k].max_abs_diff(&direct[k]) < 1e-9 * direct[k].norm_inf(), "t = {s}, degree {k}");
        }
    }
    // with a constant form the exact complex is the linear model
    let h = form("0.7, -0.2", "0");
    let w = witten_operator(&dec, &h, 3.0).unwrap();
    let model = w.linear_model(&dec, 3.0);
    for k in 0..3 {
        assert!(model[k].max_abs_diff(&w.laplacians[k]) < 1e-9 * model[k].norm_inf());
    }
}

#[test]
fn quadratic_coefficient_converges_to_norm_squared() {
    let om = form("0.5, 0", "sinp(x1)*cosp(x2)/(2*pi)");
    let err = |n: usize| {
        let dec = build_dec(n).unwrap();
        let w = witten_operator(&dec, &om, 1.0).unwrap();
        let b1 = w.b[0].mul_vec(&vec![1.0; n * n]);
        let mut e: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let p = [i as f64 / n as f64, j as f64 / n as f64];
                let o = om.at(&p).unwrap();
                e = e.max((b1[dec.vertex(i, j)] - (o[0] * o[0] + o[1] * o[1])).abs());
            }
        }
        e
    };
    let (e1, e2) = (err(16), err(32));
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "observed order {order} ({e1:.3e}, {e2:.3e})");
}

#[test]
fn split_at_zero_is_cohomology() {
    let dec = build_dec(16).unwrap();
    let w = witten_operator(&dec, &sys(GRADIENT).omega, 0.0).unwrap();
    let s = spectral_split(&w, &[1, 2, 1]).unwrap();
    assert_eq!(s.small_counts, vec![1, 2, 1]);
    for d in &s.degrees {
        assert!(d.small_values().iter().all(|v| v.abs() < 1e-8));
    }
}

#[test]
fn sparse_split_agrees_with_dense_oracle() {
    for n in [16, 20] {
        let dec = build_dec(n).unwrap();
        let w = witten_operator(&dec, &sys(GRADIENT).omega, 6.0).unwrap();
        let s = spectral_split(&w, &[1, 2, 1]).unwrap();
        for (k, d) in s.degrees.iter().enumerate() {
            let (vals, _) = eigen::dense_eigenpairs(&w.laplacians[k].to_dense());
            for (a, b) in d.values.iter().zip(&vals) {
                assert!((a - b).abs() < 1e-8 * w.norm(k), "N = {n}, degree {k}: {a} vs {b}");
            }
            let dense_small = vals.iter().filter(|&&v| v < d.theta).count();
            assert_eq!(dense_small, d.small_count);
        }
        assert_eq!(s.small_counts, vec![1, 2, 1]);
    }
}

#[test]
fn no_small_eigenvalues_without_rest_points() {
    let dec = build_dec(16).unwrap();
    let w = witten_operator(&dec, &form("1, 0", "0"), 5.0).unwrap();
    let s = spectral_split(&w, &[0, 0, 0]).unwrap();
    assert_eq!(s.small_counts, vec![0, 0, 0]);
    assert!(s.degrees.iter().all(|d| d.values[0] > 1.0));
    assert_eq!(spectral_betti(&[1.0, 0.0], 5.0).unwrap(), vec![0, 0, 0]);
    assert_eq!(spectral_betti(&[0.0, 0.0], 5.0).unwrap(), vec![1, 2, 1]);
}

#[test]
fn split_choice_rules() {
    assert_eq!(choose_split(&[1e-20, 50.0, 60.0], 1e-12, 5.0).map(|s| s.0), Some(1));
    assert_eq!(choose_split(&[30.0, 31.0], 1e-12, 5.0).map(|s| s.0), Some(0));
    assert!(choose_split(&[0.5, 1.0, 2.0], 1e-12, 5.0).is_none());
}

const TILTED: &str = "dim = 2\nfield.1 = sinp(x1) - 0.5\nfield.2 = sinp(x2)\nomega.harmonic = 0.5, 0\nomega.potential = (cosp(x1) + cosp(x2))/(2*pi)\n";

struct Run {
    wop: WittenOperator,
    split: SpectralSplit,
    intmap: IntegrationMap,
    cx: crate::novikov::NovikovComplex,
}

fn run(text: &str, n: usize, t: f64) -> Run {
    let s = sys(text);
    let rp = crate::flow::find_rest_points(&s).unwrap();
    let cx = crate::novikov::compute_complex(&s, &rp, 10.0, &Default::default()).unwrap().complex;
    let dec = build_dec(n).unwrap();
    let wop = witten_operator(&dec, &s.omega, t).unwrap();
    let split = spectral_split(&wop, &cx.n_k).unwrap();
    let intmap = integration_map(&s, &dec, &split, &rp).unwrap();
    Run { wop, split, intmap, cx }
}

#[test]
fn int_zero_of_constants_is_point_evaluation() {
    let r = run(GRADIENT, 16, 0.0);
    // the small 0-form at t = 0 is the normalized constant, cochain value ±1
    assert!((r.intmap.matrices[0][(0, 0)].abs() - 1.0).abs() < 1e-10);
    let dec = build_dec(16).unwrap();
    assert_eq!(dec.whitney0(&vec![1.0; 256], &[0.37, 0.81]), 1.0);
}

#[test]
fn potentials_on_rays_match_omega() {
    let r = run(TILTED, 16, 6.0);
    let rays: Vec<_> = r.intmap.patches.iter().flat_map(|p| &p.rays).collect();
    assert_eq!(rays.len(), 4);
    assert!(rays.iter().all(|ray| ray.h_defect < 1e-6 && ray.h_end < 0.0));
    assert!(r.intmap.patches.iter().all(|p| p.unlabeled == 0));
}

#[test]
fn chain_residual_decreases_with_refinement() {
    let res = |n| {
        let r = run(TILTED, n, 6.0);
        chain_residual(&r.intmap, &r.wop, &r.split, &r.cx).relative
    };
    let (a, b) = (res(16), res(32));
    assert!((a / b).log2() >= 1.0, "{a:.3e} → {b:.3e}");
}

#[test]
fn torsion_identities_hold() {
    for (text, t) in [(TILTED, 6.0), (GRADIENT, 6.0)] {
        let r = run(text, 24, t);
        let rep = torsion_report(&r.wop, &r.split, &r.intmap, &r.cx, None, None).unwrap();
        assert!(rep.residual_split <= 1e-8 && rep.residual_split_per_degree <= 1e-8, "{rep:?}");
        assert!(rep.residual_volume <= 1e-8, "{rep:?}");
        assert!(rep.log_dets.iter().all(|d| d.an.is_finite() && d.la.is_finite()));
    }
}

#[test]
fn log_det_matches_dense_oracle() {
    let r = run(TILTED, 12, 4.0);
    let rep = torsion_report(&r.wop, &r.split, &r.intmap, &r.cx, None, None).unwrap();
    for (k, d) in rep.log_dets.iter().enumerate() {
        let (vals, _) = eigen::dense_eigenpairs(&r.wop.laplacians[k].to_dense());
        let all: f64 = vals.iter().map(|v| v.ln()).sum();
        let small: f64 = vals[..r.split.small_counts[k]].iter().map(|v| v.ln()).sum();
        assert!((d.an - all).abs() < 1e-9 * all.abs());
        assert!((d.la - (all - small)).abs() < 1e-9 * all.abs());
    }
}

const ROTATING: &str = "dim = 2\nfield.1 = cosp(x2)\nfield.2 = sinp(x2)\nomega.harmonic = 0.7, -1.3\n";

#[test]
fn r_invariant_examples() {
    let rot = sys(ROTATING);
    let r = r_invariant(&rot, &rot.omega, 128).unwrap();
    assert!((r - 0.7).abs() < 1e-10);
    assert!(r_invariant(&rot, &form("0, 0", "sinp(x1)*cosp(x2) + cosp(x2)"), 128).unwrap().abs() < 1e-10);
    let constant = sys("dim = 2\nfield.1 = 1\nfield.2 = 0\n");
    assert_eq!(r_invariant(&constant, &form("1, 2", "sinp(x1)"), 32).unwrap(), 0.0);
    assert!(matches!(r_invariant(&sys(GRADIENT), &form("1, 0", "0"), 32), Err(crate::Error::HasRestPoint(_))));
    // linear in ω
    let wavy = sys("dim = 2\nfield.1 = 2 + cosp(x1 + x2)\nfield.2 = sinp(x2) + 0.5*sinp(x1)\n");
    let (a, b) = (form("1, 0", "0"), form("0, 1", "sinp(x1)"));
    let ab = form("2, -3", "-3*sinp(x1)");
    let lhs = r_invariant(&wavy, &ab, 64).unwrap();
    let rhs = 2.0 * r_invariant(&wavy, &a, 64).unwrap() - 3.0 * r_invariant(&wavy, &b, 64).unwrap();
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn r_invariant_flips_under_angle_reflection() {
    let a = sys("dim = 2\nfield.1 = cosp(x2) + 0.3*sinp(x1)\nfield.2 = sinp(x2)\nomega.harmonic = 0.4, 1.1\nomega.potential = cosp(x1)\n");
    let b = sys("dim = 2\nfield.1 = cosp(x2) + 0.3*sinp(x1)\nfield.2 = -sinp(x2)\nomega.harmonic = 0.4, 1.1\nomega.potential = cosp(x1)\n");
    let (ra, rb) = (r_invariant(&a, &a.omega, 64).unwrap(), r_invariant(&b, &b.omega, 64).unwrap());
    assert!(ra.abs() > 1e-3 && (ra + rb).abs() < 1e-12);
}
