//! Full pipeline on one system through the library entry point, JSON to stdout.
use novikov::cli::{run, Command, RunConfig};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/gradient_torus.sys").into());
    let mut cfg = RunConfig::new(path);
    cfg.t = vec![6.0, 10.0];
    let outcome = run(Command::ReportAll, &cfg);
    if let Some(report) = outcome.report {
        println!("{}", report.to_json().unwrap());
    }
    if let Some(e) = outcome.error {
        eprintln!("error: {e}");
    }
    std::process::exit(outcome.exit_code);
}
