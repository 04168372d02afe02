use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbitframe"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(file: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(file).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn two_atom_aux_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&scenario("two_atom_aux.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let aux = fs::read_to_string(tmp.path().join("aux.csv")).unwrap();
    let rows: Vec<&str> = aux.lines().take(4).collect();
    assert_eq!(rows, ["n,re_0,im_0,re_1,im_1", "0,1,0,1,0", "1,1,0,-1,0", "2,0,0,0,0"]);
    let r = report(tmp.path());
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["seed"], 7);
    for key in ["version", "modules", "tolerances", "wall_clock_seconds", "checks"] {
        assert!(r.get(key).is_some(), "report lacks {key}");
    }
}

#[test]
fn rm_sweep_reports_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&scenario("inv_sqrt_x_rm.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let rm = fs::read_to_string(tmp.path().join("rm.csv")).unwrap();
    let norms: Vec<f64> = rm.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 5);
    assert!(norms.windows(2).all(|p| p[1] > p[0]), "{norms:?}");
    assert_eq!(report(tmp.path())["result"]["trend"], "growing");
}

#[test]
fn failed_expectation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&scenario("inv_sqrt_x_rm_bounded.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(tmp.path())["passed"], Value::Bool(false));
}

#[test]
fn empty_scenario_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("empty.toml");
    fs::write(&file, "").unwrap();
    let o = run(&file, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("name"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_field_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("typo.toml");
    fs::write(&file, "name = \"t\"\nkind = \"aux\"\nhorizn = 4\n").unwrap();
    let o = run(&file, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizn"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["cantor_orbit.toml", "random_solve.toml", "step_diagnose.toml"] {
        let (a, b) = (tmp.path().join(format!("a_{name}")), tmp.path().join(format!("b_{name}")));
        assert_eq!(run(&scenario(name), &a, &[]).status.code(), Some(0));
        assert_eq!(run(&scenario(name), &b, &[]).status.code(), Some(0));
        let mut csvs = 0;
        for entry in fs::read_dir(&a).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                let other = b.join(path.file_name().unwrap());
                assert_eq!(fs::read(&path).unwrap(), fs::read(other).unwrap(), "{}", path.display());
                csvs += 1;
            }
        }
        assert!(csvs > 0, "{name} wrote no CSV");
    }
}

#[test]
fn seed_override_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&scenario("random_solve.toml"), &a, &[]).status.code(), Some(0));
    run(&scenario("random_solve.toml"), &b, &["--seed", "99"]);
    assert_eq!(report(&b)["seed"], 99);
    assert_ne!(fs::read(a.join("solution.csv")).unwrap(), fs::read(b.join("solution.csv")).unwrap());
}

#[test]
fn presets_list() {
    let o = bin().args(["presets", "list"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["constant", "linear_x", "inv_sqrt_x", "half_indicator"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

fn diagnose(args: &[&str]) -> Value {
    let o = bin().arg("diagnose").args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn diagnose_preset_csv_and_measure() {
    let v = diagnose(&["linear_x", "--depth", "6", "--max-m", "16"]);
    assert_eq!(v["diagnosis"]["classification"], "bessel_only");
    let v = diagnose(&[scenario("step.csv").to_str().unwrap(), "--depth", "6", "--max-m", "16"]);
    assert_eq!(v["diagnosis"]["classification"], "frame");
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("two_atom.json");
    fs::write(&m, r#"{"kind":"atomic","atoms":[[0.0,0.5],[0.5,0.5]]}"#).unwrap();
    let v = diagnose(&[m.to_str().unwrap(), "--max-m", "16"]);
    assert_eq!(v["diagnosis"]["classification"], "lower_semi_frame_only");
}

#[test]
fn diagnose_rejects_unknown_spec() {
    let o = bin().args(["diagnose", "not_a_weight"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
