//! Instantons between rest points, the Novikov complex and the δ² = 0 check.
use novikov::flow::find_rest_points;
use novikov::instanton::SearchOptions;
use novikov::novikov::{check_delta_squared, compute_complex};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let run = compute_complex(&sys, &rp, 10.0, &SearchOptions::default())?;
    for i in &run.instantons {
        println!("{} -> {}  class {:?}  ω = {:+.5}  sign {:+}", i.from, i.to, i.winding.0, i.omega_value, i.sign);
    }
    println!("n_k = {:?}", run.complex.n_k);
    for k in 0..run.complex.dim() {
        println!("δ{k}:");
        for row in run.complex.differential(k) {
            let cells: Vec<String> = row.iter().map(|s| format!("{:?}", s.terms.iter().map(|t| (t.coefficient, t.exponent)).collect::<Vec<_>>())).collect();
            println!("  {}", cells.join("  "));
        }
    }
    let d2 = check_delta_squared(&run.complex);
    println!("δ² = 0: {} ({} coefficients)", d2.passed, d2.coefficients_checked);
    Ok(())
}
