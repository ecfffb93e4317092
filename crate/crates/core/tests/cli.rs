use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, extra: &[&str]) -> (i32, PathBuf) {
    let cfg = dir.join("run.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_bergman-lab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .status()
        .unwrap();
    (status.code().unwrap(), out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV as `column -> values`, skipping `#` lines.
fn column(path: &Path, name: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn model_summary_reports_closed_form_and_galerkin() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "model", "lambda": [-1, 2, 3], "q": 1}"#, &[]);
    assert_eq!(code, 0);
    let s = json(&out.join("summary.json"));
    let at_q = &s["results"]["at_q"];
    assert_eq!(format!("{:.5}", at_q["closed_form"].as_f64().unwrap()), "0.19351");
    assert!(at_q["galerkin"].as_f64().is_some());
    assert!(at_q["abs_diff"].as_f64().unwrap() <= 1e-4);
    assert_eq!(at_q["pass"], Value::Bool(true));
    assert_eq!(s["config"]["degree"], 16);
    assert_eq!(s["pass"], Value::Bool(true));
}

#[test]
fn fubini_study_rows_are_constant() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "manifold", "preset": "fubini-study(1)", "k_list": [8]}"#, &[]);
    assert_eq!(code, 0);
    let b = column(&out.join("manifold.csv"), "B");
    assert_eq!(b.len(), 10);
    for v in b {
        assert_eq!(format!("{:.5}", v.parse::<f64>().unwrap()), "2.86479");
    }
    let re = column(&out.join("manifold.csv"), "point_re");
    assert!(re.iter().any(|v| v == "inf"));
}

#[test]
fn scaling_rows_match_closed_form() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "scaling", "preset": "quartic(1, 1)", "k_list": [100, 10000]}"#, &[]);
    assert_eq!(code, 0);
    let csv = out.join("scaling.csv");
    let dev = column(&csv, "deviation_order0");
    let closed = column(&csv, "closed_form_order0");
    for (a, b) in dev.iter().zip(&closed) {
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((a - b).abs() <= 1e-9 * b);
    }
    let header = fs::read_to_string(&csv).unwrap();
    let columns = header.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        columns,
        "k,deviation_order0,deviation_order1,deviation_order2,localization_ratio,closed_form_order0"
    );
}

#[test]
fn spectral_run_writes_contract_rows() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "spectral", "lambda": [-1], "nu_sweep": [0.25, 0.5, 1.5]}"#, &[]);
    assert_eq!(code, 0);
    let csv = out.join("spectral.csv");
    let pass = column(&csv, "pass");
    assert!(!pass.is_empty() && pass.iter().all(|p| p == "true"));
    let quantities = column(&csv, "quantity");
    for q in ["low_energy_bergman_origin", "alpha_peak_sqr", "rayleigh_quotient", "exhaustion_pairing_residual"] {
        assert!(quantities.iter().any(|x| x == q), "{q}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = r#"{"command": "report-all", "manifold": {"k_list": [4, 8]}, "scaling": {"k_list": [16, 100]}}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (ca, oa) = run(a.path(), config, &["--jobs", "1"]);
    let (cb, ob) = run(b.path(), config, &[]);
    assert_eq!((ca, cb), (0, 0));
    let mut files = Vec::new();
    for sub in ["", "model", "manifold", "scaling", "spectral"] {
        for entry in fs::read_dir(oa.join(sub)).unwrap() {
            let p = entry.unwrap().path();
            if p.is_file() {
                files.push(p.strip_prefix(&oa).unwrap().to_path_buf());
            }
        }
    }
    assert!(files.len() >= 11);
    for f in files {
        assert_eq!(fs::read(oa.join(&f)).unwrap(), fs::read(ob.join(&f)).unwrap(), "{}", f.display());
    }
}

#[test]
fn every_csv_starts_with_a_units_comment() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "report-all", "manifold": {"k_list": [4, 8]}}"#, &[]);
    assert_eq!(code, 0);
    let mut seen = 0;
    for sub in ["model", "manifold", "scaling", "spectral"] {
        for entry in fs::read_dir(out.join(sub)).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().and_then(|e| e.to_str()) == Some("csv") {
                let text = fs::read_to_string(&p).unwrap();
                assert!(text.starts_with("# "), "{}", p.display());
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 6);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_tolerance_fails_the_run() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(
        tmp.path(),
        r#"{"command": "manifold", "preset": "fubini-study(1)", "k_list": [4, 8], "tolerances": {"bergman_rel": 0}}"#,
        &[],
    );
    assert_eq!(code, 1);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["pass"], Value::Bool(false));
    let failed: Vec<&str> = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["exact_bergman_rel"]);
}

#[test]
fn errors_write_a_record_and_exit_two() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "manifold", "k_list": [8, 4]}"#, &[]);
    assert_eq!(code, 2);
    let e = json(&out.join("error.json"));
    assert_eq!(e["error"]["kind"], "validation");
    assert!(e["error"]["message"].as_str().unwrap().contains("k_list"));

    let (code, out) = run(tmp.path(), r#"{"command": "manifold", "preset": "torus(1)"}"#, &[]);
    assert_eq!(code, 2);
    assert_eq!(json(&out.join("error.json"))["error"]["kind"], "parse");

    // A later successful run in the same directory clears the record.
    let (code, out) = run(tmp.path(), r#"{"command": "model", "lambda": [1]}"#, &[]);
    assert_eq!(code, 0);
    assert!(!out.join("error.json").exists());
}

#[test]
fn strict_mode_fails_on_warnings() {
    let tmp = TempDir::new().unwrap();
    let config = r#"{"command": "spectral", "lambda": [-1, 2], "q": 0}"#;
    let (code, out) = run(tmp.path(), config, &[]);
    assert_eq!(code, 0);
    assert!(!json(&out.join("summary.json"))["warnings"].as_array().unwrap().is_empty());
    let (code, _) = run(tmp.path(), config, &["--strict"]);
    assert_eq!(code, 1);
}

#[test]
fn seed_is_echoed_and_changes_nothing_else_in_exact_suites() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), r#"{"command": "model", "lambda": [-1]}"#, &["--seed", "5"]);
    assert_eq!(code, 0);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["seed"], 5);
    assert_eq!(s["results"]["commutator_suite"]["max_residual"].as_f64(), Some(0.0));
}
