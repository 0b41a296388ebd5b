//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::{Command, ExitCode};
use std::time::Instant;

use novikov::expr::parse;
use novikov::flow::{find_rest_points, RestPoint};
use novikov::instanton::SearchOptions;
use novikov::novikov::{
    assemble_complex, betti_table, build_instanton_counting, build_orbit_counting, check_delta_squared, compute_complex, novikov_inequalities,
};
use novikov::orbit::{find_closed_orbits, OrbitOptions};
use novikov::torus::ClosedOneForm;
use novikov::witten::{
    build_dec, chain_residual, integration_map, r_invariant, spectral_betti, spectral_split, torsion_report, witten_operator, TorsionReport,
};
use novikov::FieldSystem;

type Check = Result<String, String>;

const SYSTEMS: [&str; 6] = ["gradient_torus", "tilted_torus", "two_orbits", "attracting_orbit", "rotating", "constant"];

fn system(name: &str) -> FieldSystem {
    FieldSystem::from_file(format!("{}/systems/{name}.sys", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn counts(rp: &[RestPoint]) -> Vec<usize> {
    (0..=2).map(|k| rp.iter().filter(|r| r.morse_index == k).count()).collect()
}

fn rest_points() -> Check {
    let sys = system("gradient_torus");
    let start = Instant::now();
    let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut err: f64 = 0.0;
    let mut indices = Vec::new();
    for r in &rp {
        for &x in &r.position {
            err = err.max((x - (2.0 * x).round() / 2.0).abs());
        }
        // f = cos + cos is maximal at the origin: index 2 there, 0 at (½, ½)
        let odd = r.position.iter().filter(|&&x| ((2.0 * x).round() as i64).rem_euclid(2) == 1).count();
        indices.push((r.morse_index, 2 - odd, r.hyperbolic));
    }
    let mut sorted: Vec<usize> = indices.iter().map(|i| i.0).collect();
    sorted.sort();
    let ok = rp.len() == 4 && sorted == [0, 1, 1, 2] && indices.iter().all(|&(a, b, h)| a == b && h) && err <= 1e-10 && secs < 1.0;
    ensure(ok, format!("{} rest points, indices {sorted:?}, max lattice error {err:.1e}, {secs:.2} s", rp.len()))
}

fn delta_squared() -> Check {
    let sys = system("gradient_torus");
    let start = Instant::now();
    let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
    let run = compute_complex(&sys, &rp, 10.0, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let d2 = check_delta_squared(&run.complex);
    let mut flips_detected = 0;
    for i in 0..run.instantons.len() {
        let mut flipped = run.instantons.clone();
        flipped[i].sign = -flipped[i].sign;
        let cs = run.complex.counts.iter().map(|c| build_instanton_counting(c.from, c.to, &flipped, c.cutoff, c.exhaustive)).collect();
        let cx = assemble_complex(2, &rp, cs, 10.0).map_err(|e| e.to_string())?;
        if !check_delta_squared(&cx).passed {
            flips_detected += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let n = run.instantons.len();
    let ok = d2.passed && d2.coefficients_checked > 0 && n > 0 && flips_detected == n && secs < 30.0;
    ensure(
        ok,
        format!(
            "{n} instantons, {} coefficients all zero: {}, single flips detected {flips_detected}/{n}, {secs:.2} s",
            d2.coefficients_checked, d2.passed
        ),
    )
}

fn truncation() -> Check {
    let cutoffs = [2.0, 5.0, 10.0];
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["tilted_torus", "two_orbits", "attracting_orbit"] {
        let sys = system(name);
        let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
        let mut inst = Vec::new();
        let mut orb = Vec::new();
        for &r in &cutoffs {
            let n_inst = if rp.is_empty() {
                0
            } else {
                compute_complex(&sys, &rp, r, &SearchOptions::default()).map_err(|e| e.to_string())?.instantons.iter().filter(|i| i.omega_value.abs() <= r).count()
            };
            let search = find_closed_orbits(&sys, &OrbitOptions { cutoff: r, ..OrbitOptions::default() }).map_err(|e| e.to_string())?;
            inst.push(n_inst);
            orb.push(search.orbits.iter().filter(|o| o.xi_value.abs() <= r).count());
        }
        ok &= inst.windows(2).all(|w| w[0] <= w[1]) && orb.windows(2).all(|w| w[0] <= w[1]);
        lines.push(format!("{name}: instantons {inst:?}, orbits {orb:?}"));
    }
    ensure(ok, format!("R = {cutoffs:?}; {}", lines.join("; ")))
}

fn closed_orbits() -> Check {
    let start = Instant::now();
    let sys = system("two_orbits");
    let search = find_closed_orbits(&sys, &OrbitOptions::default()).map_err(|e| e.to_string())?;
    let primitive: Vec<_> = search.orbits.iter().filter(|o| o.period == 1).collect();
    let e = (2.0 * std::f64::consts::PI).exp();
    let mut mono_err: f64 = 0.0;
    let mut eps = Vec::new();
    for o in &primitive {
        let mu = o.multipliers.iter().map(|m| m[0]).find(|m| (m - 1.0).abs() > 1e-3).unwrap_or(1.0);
        let want = if mu > 1.0 { e } else { 1.0 / e };
        mono_err = mono_err.max(((mu - want) / want).abs());
        eps.push((mu > 1.0, o.epsilon));
    }
    eps.sort();
    let eps_ok = eps.iter().map(|e| e.1).collect::<Vec<_>>() == [-1, 1] && eps.iter().all(|&(rep, s)| s == if rep { 1 } else { -1 });
    // ε of the p-th iterate is sign det(Pᵖ − I) on the normal direction
    let iterates_ok = search.orbits.iter().all(|o| {
        let base = &search.orbits[o.primitive];
        let mu = base.multipliers.iter().map(|m| m[0]).find(|m| (m - 1.0).abs() > 1e-3).unwrap_or(1.0);
        o.epsilon == (mu.powi(o.period as i32) - 1.0).signum() as i32
    });
    let zc = build_orbit_counting(&search.orbits, 10.0, true);
    let z_zero = zc.entries.iter().all(|en| *en.value.numer() == 0);

    let sys = system("attracting_orbit");
    let search = find_closed_orbits(&sys, &OrbitOptions { cutoff: 30.0, ..OrbitOptions::default() }).map_err(|e| e.to_string())?;
    let series = build_orbit_counting(&search.orbits, 30.0, true).laplace();
    let z_nonzero = !series.terms.is_empty();
    let z_err = [1.0, 2.0, 4.0].iter().map(|&t: &f64| (series.eval_real(t) - (1.0 - (-t).exp()).ln()).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let ok = primitive.len() == 2 && mono_err <= 1e-5 && eps_ok && iterates_ok && z_zero && z_nonzero && z_err <= 1e-10 && secs < 60.0;
    ensure(
        ok,
        format!(
            "{} primitive orbits, multiplier error {mono_err:.1e}, ε ok {eps_ok}, iterate signs ok {iterates_ok}, 𝓩 = 0: {z_zero}; \
             attracting orbit |Z − log(1 − e^(−t))| = {z_err:.1e} at t = 1, 2, 4; {secs:.1} s",
            primitive.len()
        ),
    )
}

fn spectral_gap(torsions: &mut Vec<TorsionReport>) -> Check {
    let sys = system("gradient_torus");
    let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
    let n_k = counts(&rp);
    let cx = compute_complex(&sys, &rp, 10.0, &SearchOptions::default()).map_err(|e| e.to_string())?.complex;
    let dec = build_dec(48).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    let mut ok = true;
    let mut slowest: f64 = 0.0;
    for t in [6.0, 10.0, 14.0] {
        let start = Instant::now();
        let wop = witten_operator(&dec, &sys.omega, t).map_err(|e| e.to_string())?;
        let split = spectral_split(&wop, &n_k).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        ok &= split.small_counts == n_k && split.min_gap_ratio() >= 10.0;
        ratios.push(split.min_gap_ratio());
        let map = integration_map(&sys, &dec, &split, &rp).map_err(|e| e.to_string())?;
        torsions.push(torsion_report(&wop, &split, &map, &cx, None, None).map_err(|e| e.to_string())?);
    }
    ok &= ratios.windows(2).all(|w| w[0] < w[1]) && slowest < 120.0;
    ensure(ok, format!("N = 48, t = 6, 10, 14: small counts (1,2,1) each, gap ratios {}, slowest {slowest:.2} s", ratios.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", ")))
}

fn integration_chain(torsions: &mut Vec<TorsionReport>) -> Check {
    let start = Instant::now();
    let sys = system("tilted_torus");
    let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
    let n_k = counts(&rp);
    let cx = compute_complex(&sys, &rp, 10.0, &SearchOptions::default()).map_err(|e| e.to_string())?.complex;
    let mut res = Vec::new();
    for n in [32, 64] {
        let dec = build_dec(n).map_err(|e| e.to_string())?;
        let wop = witten_operator(&dec, &sys.omega, 10.0).map_err(|e| e.to_string())?;
        let split = spectral_split(&wop, &n_k).map_err(|e| e.to_string())?;
        if !split.matches_targets {
            return Err(format!("N = {n}: small counts {:?}", split.small_counts));
        }
        let map = integration_map(&sys, &dec, &split, &rp).map_err(|e| e.to_string())?;
        res.push(chain_residual(&map, &wop, &split, &cx).relative);
        torsions.push(torsion_report(&wop, &split, &map, &cx, None, None).map_err(|e| e.to_string())?);
    }
    let factor = res[0] / res[1];
    let secs = start.elapsed().as_secs_f64();
    ensure(
        factor >= 1.8 && secs < 300.0,
        format!("tilted system, t = 10: residual {:.3e} (N=32) → {:.3e} (N=64), factor {factor:.2}, order {:.2}, {secs:.1} s", res[0], res[1], factor.log2()),
    )
}

fn torsion_identities(torsions: &[TorsionReport]) -> Check {
    let mut worst_split: f64 = 0.0;
    let mut worst_vol: f64 = 0.0;
    for r in torsions {
        worst_split = worst_split.max((r.log_t_an - r.log_t_sm - r.log_t_la).abs());
        worst_vol = worst_vol.max((r.log_vol - (r.log_t_sm - r.log_t_x)).abs());
    }
    let caveat = torsions.first().map_or("", |r| r.caveat);
    ensure(
        !torsions.is_empty() && worst_split <= 1e-8 && worst_vol <= 1e-8,
        format!("{} accepted (t, N): max split defect {worst_split:.1e}, max volume defect {worst_vol:.1e}; continuum combination: {caveat}", torsions.len()),
    )
}

fn betti_and_inequalities() -> Check {
    let mut ok = true;
    let mut betti = Vec::new();
    for xi in [[0.0, 0.0], [1.0, 0.0]] {
        let spectral = spectral_betti(&xi, 5.0).map_err(|e| e.to_string())?;
        let table = betti_table(&xi, 5.0, Some(spectral.clone())).map_err(|e| e.to_string())?;
        let want = if xi[0] == 0.0 { vec![1, 2, 1] } else { vec![0, 0, 0] };
        ok &= table.betti == want && spectral == want;
        betti.push(format!("ξ = {xi:?}: closed {:?}, spectral {spectral:?}", table.betti));
    }
    let mut held = 0;
    for name in SYSTEMS {
        let sys = system(name);
        let rp = find_rest_points(&sys).map_err(|e| e.to_string())?;
        let xi = sys.omega.cohomology_class().to_vec();
        let table = betti_table(&xi, 5.0, None).map_err(|e| e.to_string())?;
        if novikov_inequalities(&counts(&rp), &table.betti).all_hold {
            held += 1;
        }
    }
    ok &= held == SYSTEMS.len();
    ensure(ok, format!("{}; inequalities hold on {held}/{} shipped systems", betti.join("; "), SYSTEMS.len()))
}

fn r_invariant_check() -> Check {
    let sys = system("rotating");
    let mut worst: f64 = 0.0;
    for a in [[1.0, 0.0], [0.0, 1.0], [0.7, -0.3], [-2.5, 1.5]] {
        let r = r_invariant(&sys, &ClosedOneForm::harmonic(a.to_vec()), 512).map_err(|e| e.to_string())?;
        worst = worst.max((r - a[0]).abs());
    }
    let exact = ClosedOneForm::exact(2, parse("cosp(x1) + sinp(x2)*sinp(x1)").unwrap());
    let r0 = r_invariant(&sys, &exact, 512).map_err(|e| e.to_string())?;
    ensure(worst <= 1e-6 && r0.abs() <= 1e-6, format!("N_q = 512: max |R − a₁| = {worst:.1e}, exact ω gives {r0:.1e}"))
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_novikov");
    let file = format!("{}/systems/tilted_torus.sys", env!("CARGO_MANIFEST_DIR"));
    let once = || Command::new(bin).args(["report-all", &file, "--t", "6,10"]).output();
    let (a, b) = (once().map_err(|e| e.to_string())?, once().map_err(|e| e.to_string())?);
    let same = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    ensure(same, format!("two report-all runs: {} and {} bytes, identical {}", a.stdout.len(), b.stdout.len(), a.stdout == b.stdout))
}

fn main() -> ExitCode {
    let mut torsions = Vec::new();
    let mut criteria: Vec<(&str, Box<dyn FnMut() -> Check>)> = vec![
        ("rest-point classification", Box::new(rest_points)),
        ("delta squared vanishes", Box::new(delta_squared)),
        ("finite truncations", Box::new(truncation)),
        ("closed-orbit data", Box::new(closed_orbits)),
    ];
    let mut failed = 0;
    let mut report = |i: usize, name: &str, r: Check| {
        let (tag, msg) = match r {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("[{tag}] {i:>2}. {name}: {msg}");
    };
    for (i, (name, f)) in criteria.iter_mut().enumerate() {
        report(i + 1, name, f());
    }
    report(5, "spectral gap", spectral_gap(&mut torsions));
    report(6, "integration chain map", integration_chain(&mut torsions));
    report(7, "torsion identities", torsion_identities(&torsions));
    report(8, "Betti numbers and inequalities", betti_and_inequalities());
    report(9, "R-invariant", r_invariant_check());
    report(10, "determinism", determinism());
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
