use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ensrob_core::fixtures;
use ensrob_core::nnmodel::{save_dataset, save_ensemble};
use ensrob_core::WitnessFile;

fn ensrob(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensrob"))
        .current_dir(dir)
        .args(args)
        .env_remove("ENSROB_SOLVER_CMD")
        .output()
        .unwrap()
}

fn golden(dir: &Path) -> (String, String) {
    let (e, d) = fixtures::two_linear_classifiers();
    let ep = dir.join("e.json");
    let dp = dir.join("d.json");
    save_ensemble(&e, &ep).unwrap();
    save_dataset(&d, &dp).unwrap();
    (ep.display().to_string(), dp.display().to_string())
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bound_prints_the_integer() {
    let dir = tempfile::tempdir().unwrap();
    let o = ensrob(dir.path(), &["bound", "4", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "125");
    let o = ensrob(dir.path(), &["bound", "--points", "2", "--classifiers", "2"]);
    assert_eq!(stdout(&o).trim(), "9");
    let o = ensrob(dir.path(), &["--json", "bound", "4", "3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bound"], "125");
    assert_eq!(ensrob(dir.path(), &["bound", "0", "3"]).status.code(), Some(3));
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let (ep, dp) = golden(dir.path());
    let o = ensrob(dir.path(), &["verify", &ep, &dp, "--epsilon", "-1", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    assert_eq!(ensrob(dir.path(), &["verify", "missing.json", &dp, "--epsilon", "1", "--alpha", "0.5"]).status.code(), Some(3));
    assert_eq!(ensrob(dir.path(), &["verify", &ep, &dp, "--alpha", "0.5"]).status.code(), Some(3));
    assert_eq!(ensrob(dir.path(), &["frobnicate"]).status.code(), Some(3));
    std::fs::write(dir.path().join("bad.json"), "{\"input_shape\": [2], \"num_labels\": \"x\"}").unwrap();
    let o = ensrob(dir.path(), &["verify", "bad.json", &dp, "--epsilon", "1", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("num_labels"));
}

#[test]
fn verify_json_and_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (ep, dp) = golden(dir.path());
    let o = ensrob(dir.path(), &["--json", "verify", &ep, &dp, "--epsilon", "2", "--alpha", "0.5", "--out", "w.json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "NOT ROBUST");
    assert!(v["report"]["pass"].as_bool().unwrap());

    let check = ensrob(dir.path(), &["check", &ep, &dp, "w.json"]);
    assert_eq!(check.status.code(), Some(0), "{}", stdout(&check));

    let w = WitnessFile::load(dir.path().join("w.json")).unwrap();
    let mut tampered = w.clone();
    tampered.probs = w.probs.iter().map(|p| p * 0.9).collect();
    tampered.save(dir.path().join("t.json")).unwrap();
    assert_ne!(ensrob(dir.path(), &["check", &ep, &dp, "t.json"]).status.code(), Some(0));

    let mut oversized = w.clone();
    oversized.attacks[0].perturbations[0] = vec![3.0, 0.0];
    oversized.save(dir.path().join("o.json")).unwrap();
    assert_ne!(ensrob(dir.path(), &["check", &ep, &dp, "o.json"]).status.code(), Some(0));

    let o = ensrob(dir.path(), &["check", &ep, &dp, "w.json", "--alpha", "0.75"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn maximize_mode_reports_objective() {
    let dir = tempfile::tempdir().unwrap();
    let (ep, dp) = golden(dir.path());
    let o = ensrob(
        dir.path(),
        &["--json", "verify", &ep, &dp, "--epsilon", "2", "--alpha", "0.5", "--mode", "maximize"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn emit_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let (ep, dp) = golden(dir.path());
    let o = ensrob(dir.path(), &["emit", &ep, &dp, "--epsilon", "2", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    ensrob(dir.path(), &["emit", &ep, &dp, "--epsilon", "2", "--alpha", "0.5", "--out", "m.lp"]);
    assert_eq!(std::fs::read(dir.path().join("m.lp")).unwrap(), o.stdout);
    assert!(stdout(&o).starts_with("\\"));
    let smt = ensrob(dir.path(), &["emit", &ep, &dp, "--epsilon", "2", "--alpha", "0.5", "--format", "smt2"]);
    assert!(stdout(&smt).contains("(check-sat)"));
}

#[test]
fn single_classifier_baselines_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let (e, d) = fixtures::two_linear_classifiers();
    let e = ensrob_core::Ensemble::new(vec![e.networks()[0].clone()]).unwrap();
    let ep: PathBuf = dir.path().join("e.json");
    save_ensemble(&e, &ep).unwrap();
    save_dataset(&d, dir.path().join("d.json")).unwrap();
    let ep = ep.display().to_string();
    let value = |kind: &str| {
        let o = ensrob(dir.path(), &["--json", "baseline", &ep, "d.json", "--epsilon", "2", "--kind", kind, "--max-milp", "1"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        (v["value"].as_f64().unwrap(), v["max_milp"]["value"].as_f64().unwrap())
    };
    let (ua, mm) = value("uniform");
    let (bda, _) = value("bda");
    assert_eq!(ua, 1.0);
    assert_eq!(bda, 1.0);
    assert_eq!(mm, 1.0);
}

#[test]
fn external_backend_needs_a_command() {
    let dir = tempfile::tempdir().unwrap();
    let (ep, dp) = golden(dir.path());
    let args = ["verify", ep.as_str(), dp.as_str(), "--epsilon", "2", "--alpha", "0.5", "--backend", "lp"];
    let o = ensrob(dir.path(), &args);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ENSROB_SOLVER_CMD"));

    // A config file in the working directory supplies the template; the
    // stub solver reports infeasibility, which maps to ROBUST.
    std::fs::write(dir.path().join("ensrob.toml"), "lp_command = \"cat {file} > /dev/null; echo infeasible\"\n").unwrap();
    assert_eq!(ensrob(dir.path(), &args).status.code(), Some(1));

    // The environment overrides the config; a silent solver is UNKNOWN.
    let o = Command::new(env!("CARGO_BIN_EXE_ensrob"))
        .current_dir(dir.path())
        .args(args)
        .env("ENSROB_SOLVER_CMD", "cat {file} > /dev/null")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
