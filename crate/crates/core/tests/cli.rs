use std::process::{Command, Output};

fn novikov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_novikov")).args(args).env("NOVIKOV_THREADS", "2").output().unwrap()
}

fn shipped(name: &str) -> String {
    format!("{}/systems/{name}.sys", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("novikov-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn invalid_parameters_exit_2_without_report() {
    let sys = shipped("gradient_torus");
    for args in [
        vec!["witten", "spectrum", sys.as_str(), "--grid", "4"],
        vec!["witten", "spectrum", sys.as_str(), "--t", "-1"],
        vec!["series", sys.as_str(), "--cutoff", "0"],
        vec!["rinv", sys.as_str(), "--quad", "2"],
    ] {
        let out = novikov(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn bad_system_files_exit_2() {
    let missing = novikov(&["rest-points", "/nonexistent/system.sys"]);
    assert_eq!(missing.status.code(), Some(2));
    let broken = scratch("broken.sys", "dim = 2\nfield.1 = sinp(x1\nfield.2 = 0\n");
    assert_eq!(novikov(&["rest-points", &broken]).status.code(), Some(2));
    let unknown = scratch("unknown.sys", "dim = 2\nfield.1 = foo(x1)\nfield.2 = 0\n");
    assert_eq!(novikov(&["rest-points", &unknown]).status.code(), Some(2));
}

#[test]
fn computational_failure_exits_3_with_partial_report() {
    let out = novikov(&["rinv", &shipped("gradient_torus")]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "failed");
    assert!(report["error"].as_str().unwrap().contains("rest point"));
}

#[test]
fn rest_points_report_shape() {
    let out = novikov(&["rest-points", &shipped("gradient_torus")]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tool"], "novikov");
    assert_eq!(report["command"], "rest-points");
    assert_eq!(report["results"]["rest_points"].as_array().unwrap().len(), 4);
    assert!(report.get("seconds").is_none());
    assert!(report["results"].get("spectra").is_none());
}

#[test]
fn series_evaluates_on_request() {
    let out = novikov(&["series", &shipped("attracting_orbit"), "--cutoff", "30", "--eval", "2"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let z = report["results"]["series"]["eval"][1].as_f64().unwrap();
    assert!((z - (1.0 - (-2.0f64).exp()).ln()).abs() < 1e-12, "{z}");
}

#[test]
fn plot_reads_a_saved_report() {
    let out = novikov(&["witten", "spectrum", &shipped("gradient_torus"), "--grid", "16", "--t", "4,6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = scratch("spectrum.json", &String::from_utf8(out.stdout).unwrap());

    let plot = novikov(&["plot", &path, "--quantity", "gap-ratio"]);
    assert_eq!(plot.status.code(), Some(0));
    let text = String::from_utf8(plot.stdout).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.len() == 2 && r[1] >= 10.0));

    let bad = novikov(&["plot", &path, "--quantity", "entropy"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("small-eigenvalues"));
}

#[test]
fn command_specific_flags() {
    let tilted = shipped("tilted_torus");
    let out = novikov(&["instantons", &tilted, "--from", "3", "--to", "1"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let list = report["results"]["instantons"].as_array().unwrap();
    assert!(!list.is_empty() && list.iter().all(|i| i["from"] == 3 && i["to"] == 1));

    let out = novikov(&["complex", &tilted, "--check-d2"]);
    assert_eq!(out.status.code(), Some(0));

    let path = scratch("growth.json", "");
    let out = novikov(&["growth", &tilted, "--rest-point", "3", "--rmax", "0.5", "--json", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["results"]["growth"].as_array().unwrap().len(), 1);

    assert_eq!(novikov(&["growth", &tilted, "--rest-point", "9"]).status.code(), Some(2));
}
