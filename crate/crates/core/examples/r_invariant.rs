//! The R-invariant of a rest-point-free field paired with harmonic and exact forms.
use novikov::expr::parse;
use novikov::torus::ClosedOneForm;
use novikov::witten::r_invariant;
use novikov::FieldSystem;

fn main() -> novikov::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/rotating.sys").into());
    let sys = FieldSystem::from_file(&path)?;
    for a in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
        println!("ω = {a:?}: R = {:.12}", r_invariant(&sys, &ClosedOneForm::harmonic(a.to_vec()), 512)?);
    }
    let exact = ClosedOneForm::exact(2, parse("sinp(x1)*cosp(x2)")?);
    println!("ω exact: R = {:.3e}", r_invariant(&sys, &exact, 512)?);
    Ok(())
}
