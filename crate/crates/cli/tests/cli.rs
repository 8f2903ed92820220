use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn loewner(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loewner"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn loewner")
}

fn config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const RADIAL: &str = r#"{
  "version": 1,
  "field": {"type": "radial", "c": {"type": "constant", "value": 1.0}, "domain": {"type": "unit_disc"}},
  "s": 0.0,
  "t_end": 1.0,
  "z0": [[0.5, 0.0]]
}"#;

#[test]
fn solve_writes_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "radial.json", RADIAL);
    let out = dir.path().join("out");
    let res = loewner(&["solve", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,re_x1,im_x1"));
    let last: Vec<f64> = csv.trim_end().lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-15);
    assert!((last[1] - 0.5 * (-1.0f64).exp()).abs() < 1e-9, "{}", last[1]);
    assert!(last[2].abs() < 1e-12);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(meta["t_reached"], 1.0);
}

#[test]
fn solve_escape_is_not_a_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "grow.json",
        r#"{"version": 1,
            "field": {"type": "radial", "c": {"type": "constant", "value": -1.0}, "domain": {"type": "unit_disc"}},
            "t_end": 5.0, "z0": [[0.5, 0.0]]}"#,
    );
    let out = dir.path().join("out");
    let res = loewner(&["solve", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trajectory.json")).unwrap()).unwrap();
    let t = meta["escape"]["time"].as_f64().unwrap();
    assert!((t - 2f64.ln()).abs() < 1e-6, "{t}");
}

#[test]
fn picard_matches_solve() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "radial.json", RADIAL);
    let out = dir.path().join("out");
    let res = loewner(&["picard", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let csv = fs::read_to_string(out.join("picard.csv")).unwrap();
    let last: Vec<f64> = csv.trim_end().lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 0.5 * (-1.0f64).exp()).abs() < 1e-10);
}

#[test]
fn demo_passes() {
    let dir = TempDir::new().unwrap();
    let res = loewner(&["demo"], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&res.stdout);
    for step in ["solve", "herglotz-check", "verify-family", "recover"] {
        assert!(stdout.contains(step), "{stdout}");
    }
    for file in ["trajectory.csv", "herglotz_report.json", "verification_report.json", "recovered.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

#[test]
fn broken_family_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "broken.json",
        r#"{"version": 1, "command": "verify-family",
            "family": {"closed_form": "broken_composition", "domain": {"type": "unit_disc"}},
            "t_end": 1.0}"#,
    );
    let out = dir.path().join("out");
    let res = loewner(&["verify-family", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verification_report.json")).unwrap()).unwrap();
    let comp = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "composition").unwrap();
    assert_eq!(comp["verdict"], "fail");
    assert!(comp["witness"].is_object(), "{comp}");
}

#[test]
fn expanding_field_fails_herglotz() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "grow.json",
        r#"{"version": 1,
            "field": {"type": "radial", "c": {"type": "constant", "value": -1.0}, "domain": {"type": "unit_disc"}}}"#,
    );
    let res = loewner(&["herglotz-check", "--config", &cfg], dir.path());
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn polydisc_pass_is_advisory() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "poly.json",
        r#"{"version": 1,
            "field": {"type": "radial", "c": {"type": "constant", "value": 1.0}, "domain": {"type": "polydisc", "n": 2}},
            "samples": {"pairs": 40}}"#,
    );
    let res = loewner(&["herglotz-check", "--config", &cfg], dir.path());
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn schema_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = config(&dir, "bad.json", r#"{"version": 1, "t_end": "soon"}"#);
    let res = loewner(&["solve", "--config", &bad], dir.path());
    assert_eq!(res.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("t_end") && stderr.contains("line 1"), "{stderr}");

    let missing = config(&dir, "missing.json", r#"{"version": 1, "t_end": 1.0}"#);
    assert_eq!(loewner(&["solve", "--config", &missing], dir.path()).status.code(), Some(3));

    let mismatch = config(&dir, "mismatch.json", &RADIAL.replace("\"version\": 1,", "\"version\": 1, \"command\": \"recover\","));
    assert_eq!(loewner(&["solve", "--config", &mismatch], dir.path()).status.code(), Some(3));

    let outside = config(&dir, "outside.json", &RADIAL.replace("[[0.5, 0.0]]", "[[1.5, 0.0]]"));
    assert_eq!(loewner(&["solve", "--config", &outside], dir.path()).status.code(), Some(3));

    assert_eq!(loewner(&["solve"], dir.path()).status.code(), Some(3));
    assert_eq!(loewner(&["frobnicate"], dir.path()).status.code(), Some(3));
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "radial.json", RADIAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for cmd in ["herglotz-check", "verify-family", "variational", "recover"] {
        let ra = loewner(&[cmd, "--config", &cfg, "--seed", "7"], &a);
        let rb = loewner(&[cmd, "--config", &cfg, "--seed", "7"], &b);
        assert_eq!(ra.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&ra.stdout));
        assert_eq!(ra.stdout, rb.stdout, "{cmd}");
    }
    for file in [
        "herglotz_report.json",
        "verification_report.json",
        "transport.json",
        "variational_report.json",
        "recovered.csv",
        "recovery_report.json",
    ] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn recover_flags_jump() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "jump.json",
        r#"{"version": 1,
            "field": {"type": "piecewise_time", "breakpoints": [0.5],
              "pieces": [
                {"type": "radial", "c": {"type": "constant", "value": 1.0}, "domain": {"type": "unit_disc"}},
                {"type": "radial", "c": {"type": "constant", "value": 2.0}, "domain": {"type": "unit_disc"}}]},
            "t_end": 1.0, "samples": {"points": 4, "times": [0.5]}}"#,
    );
    let res = loewner(&["recover", "--config", &cfg], dir.path());
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stdout));
    assert!(String::from_utf8_lossy(&res.stdout).contains("one-sided limits differ at t = 0.5"));
}
