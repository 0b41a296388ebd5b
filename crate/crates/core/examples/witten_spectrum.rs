//! Low spectrum of the Witten Laplacians and its small/large split as t grows.
use novikov::flow::find_rest_points;
use novikov::witten::{build_dec, spectral_split, witten_operator};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let n_k: Vec<usize> = (0..=2).map(|k| rp.iter().filter(|r| r.morse_index == k).count()).collect();
    let dec = build_dec(32)?;
    println!("rest-point counts {n_k:?}, grid 32");
    for t in [2.0, 5.0, 10.0, 15.0] {
        let split = spectral_split(&witten_operator(&dec, &sys.omega, t)?, &n_k)?;
        println!("t = {t:>4}: small counts {:?}, min gap ratio {:.3e}", split.small_counts, split.min_gap_ratio());
        for d in &split.degrees {
            let low: Vec<String> = d.values.iter().take(d.small_count + 2).map(|v| format!("{v:.4e}")).collect();
            println!("    degree {}: {}", d.degree, low.join(" "));
        }
    }
    Ok(())
}
