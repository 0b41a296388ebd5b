//! Twisted Betti numbers by closed form and by spectrum, and the Novikov inequalities.
use novikov::flow::find_rest_points;
use novikov::novikov::{betti_table, novikov_inequalities};
use novikov::witten::spectral_betti;
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    for xi in [[0.0, 0.0], [1.0, 0.0], [0.5, -0.25]] {
        let table = betti_table(&xi, 5.0, Some(spectral_betti(&xi, 5.0)?))?;
        println!("ξ = {xi:?}, t = 5: β = {:?}, spectral {:?}", table.betti, table.spectral.unwrap());
    }
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let n_k: Vec<usize> = (0..=2).map(|k| rp.iter().filter(|r| r.morse_index == k).count()).collect();
    let beta = betti_table(sys.omega.cohomology_class(), 5.0, None)?.betti;
    let ineq = novikov_inequalities(&n_k, &beta);
    println!("n = {n_k:?}, β = {beta:?}");
    for l in &ineq.strong {
        println!("  r = {}: {} ≥ {}  {}", l.r, l.lhs, l.rhs, if l.holds { "holds" } else { "FAILS" });
    }
    Ok(())
}
