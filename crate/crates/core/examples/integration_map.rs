//! Integration over unstable manifolds as a chain map from small forms to the Novikov complex.
use novikov::flow::find_rest_points;
use novikov::instanton::SearchOptions;
use novikov::novikov::compute_complex;
use novikov::witten::{build_dec, chain_residual, integration_map, spectral_split, witten_operator};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let cx = compute_complex(&sys, &rp, 10.0, &SearchOptions::default())?.complex;
    let t = 10.0;
    let mut last = None;
    for n in [16, 32, 64] {
        let dec = build_dec(n)?;
        let wop = witten_operator(&dec, &sys.omega, t)?;
        let split = spectral_split(&wop, &cx.n_k)?;
        let map = integration_map(&sys, &dec, &split, &rp)?;
        let res = chain_residual(&map, &wop, &split, &cx);
        let rate = last.map(|r: f64| format!(", ratio {:.2}", r / res.relative)).unwrap_or_default();
        println!("N = {n:>2}: ‖Int d − δ Int‖ relative {:.3e}{rate}", res.relative);
        last = Some(res.relative);
    }
    Ok(())
}
