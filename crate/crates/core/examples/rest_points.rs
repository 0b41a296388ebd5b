//! Rest points of a field on the torus with their Morse indices and multipliers.
use novikov::flow::find_rest_points;
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/gradient_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    println!("{} rest points", rp.len());
    for (i, r) in rp.iter().enumerate() {
        let eig: Vec<String> = r.eigenvalues.iter().map(|e| format!("{:.4}{:+.4}i", e[0], e[1])).collect();
        println!("  {i}: {:.6?}  index {}  hyperbolic {}  eigenvalues [{}]", r.position, r.morse_index, r.hyperbolic, eig.join(", "));
    }
    Ok(())
}
