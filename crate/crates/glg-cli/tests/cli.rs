use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn glg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glg"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("GLG_THREADS")
        .output()
        .expect("spawn glg")
}

fn report(dir: &Path, stem: &str) -> Value {
    let text = std::fs::read_to_string(dir.join("out").join(format!("{stem}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_glg")).arg("frobnicate").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = Command::new(env!("CARGO_BIN_EXE_glg")).arg(flag).output().unwrap();
        assert_eq!(code(&o), 0, "{flag}");
    }
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&glg(d.path(), &["vortex", "--n", "one"])), 1);
    assert_eq!(code(&glg(d.path(), &["check-identities", "--model", "nope"])), 1);
}

#[test]
fn zero_threads_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_glg"))
        .args(["goodness", "--periods", "1", "2", "--out"])
        .arg(d.path())
        .env("GLG_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let missing = d.path().join("absent.json");
    let o = glg(d.path(), &["vortex", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn vortex_energy_is_two_pi() {
    let d = tempfile::tempdir().unwrap();
    let o = glg(d.path(), &["vortex", "--n", "1", "--csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(d.path(), "vortex");
    let e = r["scalars"]["energy"].as_f64().unwrap();
    assert!((e - 2.0 * std::f64::consts::PI).abs() < 0.01 * 2.0 * std::f64::consts::PI, "{e}");
    let csv = std::fs::read_to_string(d.path().join("out/vortex_profile.csv")).unwrap();
    assert!(csv.lines().count() > 100);
}

#[test]
fn config_file_sets_parameters() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("v.json");
    std::fs::write(&cfg, r#"{"n": 2}"#).unwrap();
    let o = glg(d.path(), &["vortex", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let e = report(d.path(), "vortex")["scalars"]["energy"].as_f64().unwrap();
    assert!((e - 4.0 * std::f64::consts::PI).abs() < 0.04 * std::f64::consts::PI, "{e}");
}

#[test]
fn triviality_passes_on_default_model() {
    let d = tempfile::tempdir().unwrap();
    let o = glg(d.path(), &["triviality", "--grid", "33"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(report(d.path(), "triviality")["passed"], Value::Bool(true));
}

#[test]
fn goodness_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&glg(d.path(), &["goodness", "--periods", "1", "1.4142135623730951"])), 0);
    assert_eq!(code(&glg(d.path(), &["goodness", "--periods", "1", "2"])), 2);
    let r = report(d.path(), "goodness");
    assert_eq!(r["flags"]["good"], Value::Bool(false));
    assert!(r["series"]["witness"].is_array());
}

#[test]
fn count_orbits_matches_enumeration() {
    let d = tempfile::tempdir().unwrap();
    let o = glg(d.path(), &["count-orbits", "--genus", "2", "--degree", "3", "--punctures", "1", "--enumerate"]);
    assert_eq!(code(&o), 0);
    let r = report(d.path(), "count_orbits");
    // 2g - 2 + n = 3 zeros, all of them on one side or the other: C(3, 3).
    assert_eq!(r["scalars"]["count"].as_f64().unwrap(), 1.0);
    assert_eq!(r["scalars"]["enumerated"].as_f64().unwrap(), 1.0);
}

#[test]
fn count_orbits_out_of_range_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&glg(d.path(), &["count-orbits", "--genus", "1", "--degree", "3"])), 1);
}

#[test]
fn torus_crit_residuals() {
    let d = tempfile::tempdir().unwrap();
    let o = glg(d.path(), &["torus-crit", "--a", "0.3", "-0.2", "--delta", "0.1"]);
    assert_eq!(code(&o), 0);
    let r = report(d.path(), "torus_crit");
    let p = r["scalars"]["abs_psi_plus_sq"].as_f64().unwrap();
    let q = r["scalars"]["abs_psi_minus_sq"].as_f64().unwrap();
    assert!(((p - q) - 0.2).abs() < 1e-12);
    // |Psi+| |Psi-| = sqrt2 |a|, so p q = 2 |a|^2
    assert!((p * q - 0.26).abs() < 1e-12);
}

#[test]
fn reports_are_deterministic() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        assert_eq!(code(&glg(d.path(), &["check-identities", "--seed", "7", "--samples", "20"])), 0);
    }
    let a = std::fs::read(d1.path().join("out/check_identities.json")).unwrap();
    let b = std::fs::read(d2.path().join("out/check_identities.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn suite_quick_subset_writes_scorecard() {
    let d = tempfile::tempdir().unwrap();
    let o = glg(d.path(), &["suite", "quick", "--only", "1,9,12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 4);
    let card = report(d.path(), "scorecard");
    assert_eq!(card["passed"], Value::Bool(true));
    assert_eq!(card["members"].as_array().unwrap().len(), 3);
}

#[test]
fn suite_rejects_unknown_criterion() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&glg(d.path(), &["suite", "quick", "--only", "14"])), 1);
    assert_eq!(code(&glg(d.path(), &["suite", "medium"])), 1);
}
