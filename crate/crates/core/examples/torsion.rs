//! Torsions of the Witten complex, its small and large parts, and the volume term.
use novikov::flow::find_rest_points;
use novikov::instanton::SearchOptions;
use novikov::novikov::compute_complex;
use novikov::witten::{build_dec, integration_map, spectral_split, torsion_report, witten_operator};
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/tilted_torus.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    let rp = find_rest_points(&sys)?;
    let cx = compute_complex(&sys, &rp, 10.0, &SearchOptions::default())?.complex;
    let dec = build_dec(48)?;
    for t in [6.0, 10.0] {
        let wop = witten_operator(&dec, &sys.omega, t)?;
        let split = spectral_split(&wop, &cx.n_k)?;
        let map = integration_map(&sys, &dec, &split, &rp)?;
        let r = torsion_report(&wop, &split, &map, &cx, None, None)?;
        println!("t = {t}: log T_an {:.3e}, log T_sm {:.3e}, log T_la {:.3e}", r.log_t_an, r.log_t_sm, r.log_t_la);
        println!("        log Vol {:.6e}, log T_X {:.6e}", r.log_vol, r.log_t_x);
        println!("        split defect {:.2e}, volume defect {:.2e}", r.log_t_an - r.log_t_sm - r.log_t_la, r.log_vol - r.log_t_sm + r.log_t_x);
    }
    Ok(())
}
