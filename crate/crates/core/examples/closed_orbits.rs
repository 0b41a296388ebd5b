//! Closed orbits below a cutoff, their counting function and the orbit series Z.
use novikov::novikov::build_orbit_counting;
use novikov::orbit::{find_closed_orbits, OrbitOptions};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/attracting_orbit.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let cutoff = 12.0;
    let search = find_closed_orbits(&sys, &OrbitOptions { cutoff, ..OrbitOptions::default() })?;
    for o in search.orbits.iter().filter(|o| o.period == 1) {
        println!("primitive orbit through {:.4?}: T = {:.6}, class {:?}, multipliers {:.4?}, ε = {:+}", o.base, o.time_period, o.winding.0, o.multipliers, o.epsilon);
    }
    println!("{} orbits with |ξ| ≤ {cutoff} (stopped by {:?})", search.orbits.len(), search.stopped_by);
    let counting = build_orbit_counting(&search.orbits, cutoff, true);
    for e in &counting.entries {
        println!("  𝓩{:?} = {}", e.class.0, e.value);
    }
    let z = counting.laplace();
    for t in [1.0, 2.0, 4.0] {
        println!("Z({t}) = {:.12}", z.eval_real(t));
    }
    Ok(())
}
