use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fracgeo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracgeo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("box1.fn"), "# unit interval\nbox_indicator([0], [1], 1)\n").unwrap();
    fs::write(dir.path().join("gauss.fn"), "gaussian([0, 0], 0.4, 1)\n").unwrap();
    dir
}

#[test]
fn verify_sym_golden_case() {
    let dir = workspace();
    let out = fracgeo(dir.path(), &["verify", "sym", "--spec", "box1.fn", "--n", "1", "--s", "0.25", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    for key in ["case", "params", "grid", "terms", "margins", "verdicts", "runtime_seconds"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let terms = report["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 3);
    for t in terms {
        let v = t["value"].as_f64().unwrap();
        assert!((v - 16.0).abs() < 0.32, "{} = {v}", t["name"]);
    }
}

#[test]
fn dualmix_of_concentric_balls() {
    let dir = workspace();
    let out = fracgeo(dir.path(), &["dualmix", "--K", "ball:2", "--L", "ball:1", "--alpha", "-1", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 8.0 * std::f64::consts::PI).abs() < 1e-9, "{v}");
}

#[test]
fn malformed_spec_exits_with_position() {
    let dir = workspace();
    fs::write(dir.path().join("bad.fn"), "box_indicator([0], [1] 1)\n").unwrap();
    let out = fracgeo(dir.path(), &["verify", "sym", "--spec", "bad.fn", "--n", "1", "--s", "0.25", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains("column"), "{err}");
}

#[test]
fn bad_config_and_params_exit_two() {
    let dir = workspace();
    fs::write(dir.path().join("bad.cfg"), "n = 1\nspeed = 3\n").unwrap();
    let out = fracgeo(dir.path(), &["verify", "sym", "--spec", "box1.fn", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = fracgeo(dir.path(), &["verify", "sym", "--spec", "box1.fn", "--n", "1", "--s", "1.2", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fracgeo(dir.path(), &["verify", "sym", "--spec", "missing.fn", "--n", "1", "--s", "0.5", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = workspace();
    fs::write(dir.path().join("run.cfg"), "n = 1\ns = 0.5\np = 2\nm = 100\n").unwrap();
    let out = fracgeo(dir.path(), &["verify", "asym", "--spec", "box1.fn", "--config", "run.cfg", "--s", "0.25"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["params"]["s"].as_f64(), Some(0.25));
    assert_eq!(report["grid"]["m"].as_u64(), Some(100));
}

#[test]
fn projbody_writes_readable_body() {
    let dir = workspace();
    let out = fracgeo(
        dir.path(),
        &[
            "projbody", "--spec", "gauss.fn", "--n", "2", "--s", "0.5", "--p", "2", "--m", "32", "--quad-nodes", "32", "--out", "pi.body",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("pi.body")).unwrap();
    let body = fracgeo::projbody::read_projection_body(&text).unwrap();
    assert_eq!(body.radial_values().len(), 32);
    let reported = json(&out)["volume"].as_f64().unwrap();
    assert!((body.volume() - reported).abs() <= 1e-9 * reported);

    let out = fracgeo(dir.path(), &["dualmix", "--K", "pi.body", "--L", "pi.body", "--alpha", "1", "--n", "2", "--quad-nodes", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    let (v, vol) = (report["value"].as_f64().unwrap(), report["volume_K"].as_f64().unwrap());
    assert!((v - vol).abs() <= 1e-9 * vol);
}

#[test]
fn rearrange_and_seminorm() {
    let dir = workspace();
    let out = fracgeo(dir.path(), &["rearrange", "--spec", "gauss.fn", "--n", "2", "--m", "64", "--out", "star.grid"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    let norms = report["lp_norms"]["2"].as_array().unwrap();
    let (a, b) = (norms[0].as_f64().unwrap(), norms[1].as_f64().unwrap());
    assert!((a - b).abs() < 0.005 * a);

    let out = fracgeo(dir.path(), &["rearrange", "--grid", "star.grid"]);
    assert_eq!(out.status.code(), Some(0));

    let out = fracgeo(dir.path(), &["seminorm", "--spec", "box1.fn", "--n", "1", "--s", "0.25", "--p", "2", "--m", "400"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 16.0).abs() < 1.5, "{v}");
}

#[test]
fn suite_subset_writes_csv() {
    let dir = workspace();
    let out = fracgeo(dir.path(), &["suite", "--filter", "dual-2d", "--csv-dir", "csv", "--out", "report.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 1);
    for file in ["terms.csv", "margins.csv"] {
        let text = fs::read_to_string(dir.path().join("csv").join(file)).unwrap();
        assert!(text.lines().count() > 1);
    }
}
