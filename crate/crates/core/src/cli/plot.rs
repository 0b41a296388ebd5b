use serde_json::Value;

use crate::error::{Error, Result};

pub const PLOT_QUANTITIES: [&str; 4] = ["small-eigenvalues", "gap-ratio", "log-vol", "zeta"];

fn num(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn section<'a>(report: &'a Value, key: &str, quantity: &str) -> Result<&'a Vec<Value>> {
    report["results"][key]
        .as_array()
        .ok_or_else(|| Error::InvalidParameter(format!("report has no '{key}' section, needed for {quantity}")))
}

/// Two-column text (x, y) for one quantity of a JSON report, `#` lines as headers.
/// Blocks separated by a blank line hold one degree each for small-eigenvalues.
pub fn emit_plot_data(report: &Value, quantity: &str, range: Option<(f64, f64)>) -> Result<String> {
    let keep = |x: f64| range.is_none_or(|(a, b)| x >= a && x <= b);
    let mut out = format!("# quantity: {quantity}\n");
    if let Some((a, b)) = range {
        out.push_str(&format!("# range: [{a}, {b}]\n"));
    }
    let mut rows: Vec<(f64, f64)> = Vec::new();
    match quantity {
        "small-eigenvalues" => {
            let spectra = section(report, "spectra", quantity)?;
            let degrees = spectra.first().and_then(|s| s["degrees"].as_array()).map_or(0, |d| d.len());
            out.push_str("# t eigenvalue\n");
            for k in 0..degrees {
                out.push_str(&format!("# degree {k}\n"));
                for s in spectra {
                    let t = num(&s["t"]).unwrap_or(f64::NAN);
                    let d = &s["degrees"][k];
                    let m = d["small_count"].as_u64().unwrap_or(0) as usize;
                    for v in d["values"].as_array().into_iter().flatten().take(m) {
                        if keep(t) {
                            out.push_str(&format!("{t} {}\n", num(v).unwrap_or(f64::NAN)));
                        }
                    }
                }
                if k + 1 < degrees {
                    out.push('\n');
                }
            }
            return Ok(out);
        }
        "gap-ratio" => {
            out.push_str("# t min_gap_ratio\n");
            for s in section(report, "spectra", quantity)? {
                let ratio = s["degrees"].as_array().into_iter().flatten().filter_map(|d| num(&d["gap_ratio"])).fold(f64::INFINITY, f64::min);
                rows.push((num(&s["t"]).unwrap_or(f64::NAN), ratio));
            }
        }
        "log-vol" => {
            out.push_str("# t log_vol\n");
            for s in section(report, "torsion", quantity)? {
                rows.push((num(&s["t"]).unwrap_or(f64::NAN), num(&s["log_vol"]).unwrap_or(f64::NAN)));
            }
        }
        "zeta" => {
            out.push_str("# t Z(t)\n");
            let samples = report["results"]["series"]["samples"]
                .as_array()
                .ok_or_else(|| Error::InvalidParameter("report has no 'series' section, needed for zeta".into()))?;
            for p in samples {
                rows.push((num(&p[0]).unwrap_or(f64::NAN), num(&p[1]).unwrap_or(f64::NAN)));
            }
        }
        _ => return Err(Error::UnknownQuantity { name: quantity.into(), valid: PLOT_QUANTITIES.join(", ") }),
    }
    for (x, y) in rows.into_iter().filter(|r| keep(r.0)) {
        out.push_str(&format!("{x} {y}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn unknown_quantity_lists_valid_names() {
        let err = emit_plot_data(&json!({}), "entropy", None).unwrap_err();
        let msg = err.to_string();
        assert!(PLOT_QUANTITIES.iter().all(|q| msg.contains(q)), "{msg}");
    }

    #[test]
    fn zeta_samples_respect_range() {
        let r = json!({"results": {"series": {"samples": [[1.0, 0.5], [2.0, 0.25], [3.0, 0.125]]}}});
        let s = emit_plot_data(&r, "zeta", Some((1.5, 3.0))).unwrap();
        let data: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, ["2 0.25", "3 0.125"]);
    }

    #[test]
    fn small_eigenvalues_take_only_the_small_part() {
        let r = json!({"results": {"spectra": [{"t": 4.0, "degrees": [
            {"small_count": 1, "values": [0.1, 50.0]},
            {"small_count": 0, "values": [60.0]}]}]}});
        let s = emit_plot_data(&r, "small-eigenvalues", None).unwrap();
        assert!(s.contains("4 0.1\n") && !s.contains(" 50"));
    }
}
