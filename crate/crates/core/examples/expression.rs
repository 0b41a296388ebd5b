//! Parse a field component and evaluate it with first and second derivatives.
use novikov::expr::{eval_jet, parse};

fn main() -> novikov::Result<()> {
    let src = std::env::args().nth(1).unwrap_or_else(|| "sinp(x1)*(1 + cosp(x2)) - 0.5*x1^2".into());
    let e = parse(&src)?;
    println!("{src}");
    for p in [[0.0, 0.0], [0.25, 0.1], [0.5, 0.75]] {
        let j = eval_jet(&e, &p)?;
        println!("at {p:?}: value {:.6}, gradient {:.6?}, hessian {:.4?}", j.value, j.gradient, j.hessian);
    }
    Ok(())
}
