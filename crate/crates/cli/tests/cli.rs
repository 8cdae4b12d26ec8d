use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyperwave(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperwave"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HYPERWAVE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn converge_writes_a_decreasing_l2_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperwave(&["converge", "--space", "H3R", "--a", "2", "--s", "0.6"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,l2_error_on_B,sup_error_on_B"));
    let l2: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(l2.len(), 3);
    assert!(l2.windows(2).all(|w| w[1] < w[0]), "{l2:?}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn order_at_most_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperwave(&["converge", "--a", "1.0", "--s", "0.6"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("a > 1"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["converge", "--a", "2", "--s", "0.6", "--bogus"][..],
        &["evolve", "--a", "2", "--t", "0.1", "--profile", "wave"][..],
        &["phi", "--lambda", "1", "--t", "1", "--space", "H9Z"][..],
        &["schur", "--a", "2", "--s", "fast"][..],
    ] {
        assert_eq!(hyperwave(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn truncated_profile_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperwave(
        &["transform", "--profile", "heat", "--dir", "forward", "--radial-max", "3"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["evolve", "--space", "H2C", "--a", "1.5", "--profile", "q=3.1", "--t", "0.2"];
    assert!(hyperwave(&args, a.path()).status.success());
    assert!(hyperwave(&args, b.path()).status.success());
    let x = fs::read(a.path().join("evolve.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("evolve.csv")).unwrap());
    assert_eq!(String::from_utf8(x).unwrap().lines().next(), Some("radius,re,im"));
}

#[test]
fn manifest_reproduces_the_data() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["maximal", "--a", "2", "--s", "0.6", "--family", "q=2.2,cut=16;heat", "--time-points", "16"];
    assert!(hyperwave(&args, a.path()).status.success());
    let manifest = a.path().join("manifest.json");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["library"]["version"], "0.1.0");
    assert_eq!(m["inputs"]["time_points"], 16);
    assert!(m["calibration"]["c_norm"].as_f64().unwrap() > 0.0);
    let o = hyperwave(&["maximal", "--config", manifest.to_str().unwrap()], b.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(a.path().join("maximal.csv")).unwrap(),
        fs::read(b.path().join("maximal.csv")).unwrap()
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"kind": "phi", "space": "H3R", "lambda": 5.0, "t": 0.5}"#).unwrap();
    let o = hyperwave(&["phi", "--config", config.to_str().unwrap(), "--lambda", "2.0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lambda"], 2.0);
    let exact = (2.0f64 * 0.5).sin() / (2.0 * 0.5f64.sinh());
    assert!((v["value"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert!(v["est_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"kind": "schur", "a": 2.0}"#).unwrap();
    let o = hyperwave(&["phi", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schur_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperwave(&["schur", "--a", "2", "--s", "auto", "--eta-points", "4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("schur.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("eta,I1,I2,I3,row_integral"));
    assert_eq!(text.lines().count(), 5);
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("schur_summary.json")).unwrap()).unwrap();
    assert_eq!(s["s"], 0.5);
    for key in ["sup_row", "sup_col", "stability_pct"] {
        assert!(s[key].as_f64().unwrap().is_finite(), "{key}");
    }
}

#[test]
fn transform_round_trip_reports_its_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperwave(&["transform", "--space", "H2H", "--profile", "q=6", "--dir", "roundtrip"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(m["summary"]["relative_l2_error"].as_f64().unwrap() < 1e-8);
    let text = fs::read_to_string(dir.path().join("transform_roundtrip.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("grid,value_re,value_im"));
}
