//! Check that ω is a Lyapunov form for X and estimate volume growth of unstable manifolds.
use novikov::flow::{check_lyapunov, estimate_growth, find_rest_points, DEFAULT_LYAPUNOV_GRID};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let lyap = check_lyapunov(&sys, &rp, DEFAULT_LYAPUNOV_GRID)?;
    println!("Lyapunov: {} (max ω(X) off rest points {:.3e}, {} violations)", lyap.is_lyapunov, lyap.max_omega_x, lyap.violations.len());
    for r in rp.iter().filter(|r| r.morse_index > 0) {
        let g = estimate_growth(&sys, r, &rp, 1.0, 64, 50.0)?;
        let last = g.volumes.last().copied().unwrap_or(0.0);
        println!("  W⁻ at {:.3?} (dim {}): vol(B_1) = {last:.4}, fitted rate {:.3}, bounded {}", r.position, g.dimension, g.fitted_c, g.eg_pass);
    }
    Ok(())
}
