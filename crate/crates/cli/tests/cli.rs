//! End-to-end tests of the command-line interface: exit codes, file formats,
//! reproducibility contract.

use std::path::Path;
use std::process::{Command, Output};

fn orbitstat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitstat"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const POISSON_CFG: &str = "\
experiment = poisson-test
system = doubling
radius = 0.0009765625
t = 1
ensemble_size = 2000
budget = 10000
seed = 42
output_path = out/poisson
";

#[test]
fn run_writes_json_and_csv_with_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", POISSON_CFG);
    let out = orbitstat(&[&"run", &cfg.to_str().unwrap(), &"--threads", &"1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/poisson.json")).unwrap())
            .unwrap();
    assert_eq!(report["experiment"], "poisson-test");
    assert_eq!(report["threads"], 1);
    assert!(report["version"].is_string());
    assert!(report["config"]["seed"] == "42");
    assert!(report["results"]["tv_distance"].is_number());

    let csv_text = std::fs::read_to_string(dir.path().join("out/poisson.csv")).unwrap();
    let mut lines = csv_text.lines();
    assert_eq!(lines.next(), Some("k,count,frequency,poisson_pmf"));
    assert!(!csv_text.contains('\r'), "LF line endings required");
    // counts column sums to the ensemble size
    let total: u64 = csv_text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 2000);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", POISSON_CFG);
    let cfg = cfg.to_str().unwrap();
    assert!(orbitstat(&[&"run", &cfg, &"--threads", &"1"], dir.path()).status.success());
    let json1 = std::fs::read(dir.path().join("out/poisson.json")).unwrap();
    let csv1 = std::fs::read(dir.path().join("out/poisson.csv")).unwrap();
    assert!(orbitstat(&[&"run", &cfg, &"--threads", &"1"], dir.path()).status.success());
    assert_eq!(json1, std::fs::read(dir.path().join("out/poisson.json")).unwrap());
    assert_eq!(csv1, std::fs::read(dir.path().join("out/poisson.csv")).unwrap());
}

#[test]
fn check_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", POISSON_CFG);
    assert!(orbitstat(&[&"run", &cfg.to_str().unwrap(), &"--threads", &"1"], dir.path())
        .status
        .success());
    let report_path = dir.path().join("out/poisson.json");

    let out = orbitstat(&[&"check", &report_path.to_str().unwrap(), &"--threads", &"1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exact"));

    // parallel rerun compares statistically and still reproduces
    let out = orbitstat(&[&"check", &report_path.to_str().unwrap(), &"--threads", &"4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("statistical"));

    // tampered seed: exit 4 and the first differing field is named
    let mut report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    report["config"]["seed"] = serde_json::Value::String("43".into());
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&report).unwrap()).unwrap();
    let out = orbitstat(&[&"check", &tampered.to_str().unwrap(), &"--threads", &"1"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mismatch"), "{err}");
    assert!(err.contains("results."), "{err}");
}

#[test]
fn invalid_config_exits_2_with_named_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.cfg",
        "experiment = poisson-test\nsystem = solenoid\ngamma = 0.5\ntheta = 0.9\nradius = 0.02\n",
    );
    let out = orbitstat(&[&"run", &cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theta"), "{err}");
    // machine-readable error payload
    let payload: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(payload["error"], "config");
}

#[test]
fn undersampled_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // ball so small no sample hits it: horizon undefined
    let cfg = write(
        dir.path(),
        "tiny.cfg",
        "experiment = poisson-test\nsystem = stadium\nell = 2\nradius = 1e-9\n\
         ensemble_size = 100\nbudget = 1000\nseed = 1\noutput_path = out/tiny\n",
    );
    let out = orbitstat(&[&"run", &cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("undersampled"), "{err}");
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.cfg", POISSON_CFG);
    assert_eq!(
        orbitstat(&[&"validate", &good.to_str().unwrap()], dir.path()).status.code(),
        Some(0)
    );
    let bad = write(dir.path(), "unknown.cfg", "experiment = kac\nwhatever = 3\n");
    let out = orbitstat(&[&"validate", &bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("whatever"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", POISSON_CFG);
    let cfg = cfg.to_str().unwrap();
    assert!(orbitstat(&[&"run", &cfg, &"--threads", &"1", &"--seed", &"7"], dir.path())
        .status
        .success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/poisson.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["seed"], "7");
}
