use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interp-kit"))
        .args(args)
        .current_dir(dir)
        .env_remove("INTERPKIT_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const RUN: &str = r#"{
  "experiment": "verify-ovch",
  "seed": 5,
  "trials": 20,
  "source": {"lambda_adic": {"lambda": 2, "k_min": -4, "k_max": 4}, "p": "inf"},
  "target": {"lambda_adic": {"lambda": 2, "k_min": -4, "k_max": 4}, "p": 1},
  "rho": {"kind": "power", "theta": 0.5},
  "matrix": {"distribution": "gaussian", "dims": [9, 9]}
}"#;

#[test]
fn verify_run_is_deterministic_and_passes() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.json", RUN);
    let a = kit(
        &["verify-ovch", "--config", "run.json", "--out", "a.csv"],
        d.path(),
    );
    let b = kit(
        &["verify-ovch", "--config", "run.json", "--out", "b.csv"],
        d.path(),
    );
    assert!(
        a.status.success() && b.status.success(),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let (a, b) = (
        fs::read_to_string(d.path().join("a.csv")).unwrap(),
        fs::read_to_string(d.path().join("b.csv")).unwrap(),
    );
    assert_eq!(a, b);
    assert!(a.starts_with("trial,C_base,C_rho,ratio,bound,pass,inputs_hash,tolerance\n"));
    assert_eq!(a.lines().count(), 21);
    let j = kit(
        &[
            "verify-ovch",
            "--config",
            "run.json",
            "--format",
            "json",
            "--seed",
            "6",
        ],
        d.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["seed"], 6);
    assert_eq!(v["records"].as_array().unwrap().len(), 20);
}

#[test]
fn zero_trials_exit_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = kit(&["retract-check", "--trials", "0"], d.path());
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "trial,roundtrip_err,iota_norm,pi_norm,pass,inputs_hash,tolerance\n"
    );
}

#[test]
fn malformed_config_reports_position() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "bad.json",
        "{\n  \"experiment\": \"verify-ovch\",\n  \"trails\": 3\n}",
    );
    let o = kit(&["verify-ovch", "--config", "bad.json"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("trails"), "{err}");
    write(d.path(), "other.json", r#"{"experiment": "jk-gap"}"#);
    assert_eq!(
        kit(&["verify-ovch", "--config", "other.json"], d.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sparse_sequence_table() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "s.json",
        r#"{"experiment":"sparse-seq","rho":{"kind":"power","theta":0.5}}"#,
    );
    let o = kit(&["sparse-seq", "--config", "s.json"], d.path());
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(11).unwrap().starts_with("10,0,1,1,"));
    // ρ = t never reaches ratio 2 forward; an error unless truncated
    write(
        d.path(),
        "t.json",
        r#"{"experiment":"sparse-seq","rho":{"kind":"power","theta":1}}"#,
    );
    assert_eq!(
        kit(&["sparse-seq", "--config", "t.json"], d.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn env_cap_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.json", RUN);
    let o = Command::new(env!("CARGO_BIN_EXE_interp-kit"))
        .args(["verify-ovch", "--config", "run.json", "--trials", "2"])
        .current_dir(d.path())
        .env("INTERPKIT_CAP", "4")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("upper bounds"));
    let o = Command::new(env!("CARGO_BIN_EXE_interp-kit"))
        .args(["verify-ovch", "--config", "run.json"])
        .current_dir(d.path())
        .env("INTERPKIT_CAP", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn pair_files(dir: &Path) {
    write(
        dir,
        "s.json",
        r#"{"lambda_adic": {"lambda": 2, "k_min": -2, "k_max": 2}, "p": "inf"}"#,
    );
    write(
        dir,
        "t.json",
        r#"{"labels": [0, 1, 2], "w0": [1, 1, 1], "w1": [1, 0.5, 0.1], "p": 1}"#,
    );
    write(dir, "x.csv", "value\n0.5\n-1\n0.25\n1\n0.5\n");
    write(dir, "y.csv", "0,1\n1,-0.5\n2,2\n");
}

#[test]
fn jk_gap_one_shot() {
    let d = tempfile::tempdir().unwrap();
    pair_files(d.path());
    let args = [
        "jk-gap", "--source", "s.json", "--target", "t.json", "--x", "x.csv", "--y", "y.csv",
    ];
    let lp = kit(
        &[&args[..], &["--method", "lp", "--out", "lp.json"]].concat(),
        d.path(),
    );
    assert!(
        lp.status.success(),
        "{}",
        String::from_utf8_lossy(&lp.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("lp.json")).unwrap()).unwrap();
    assert_eq!(v["method"], "lp");
    let witness = d.path().join(v["witness_csv_path"].as_str().unwrap());
    assert!(fs::read_to_string(witness)
        .unwrap()
        .starts_with("k,label,value\n"));
    let g = kit(&[&args[..], &["--method", "greedy"]].concat(), d.path());
    let gv: serde_json::Value = serde_json::from_slice(&g.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() <= gv["value"].as_f64().unwrap() * (1.0 + 1e-9));
}

#[test]
fn nuclear_check_one_shot() {
    let d = tempfile::tempdir().unwrap();
    pair_files(d.path());
    let o = kit(
        &[
            "nuclear-check",
            "--source",
            "s.json",
            "--target",
            "t.json",
            "--x",
            "x.csv",
            "--y",
            "y.csv",
        ],
        d.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (gap, nu) = (v["gap"].as_f64().unwrap(), v["nu"].as_f64().unwrap());
    assert!(gap <= 2.0 * nu * (1.0 + 1e-6) && nu <= 2.0 * gap * (1.0 + 1e-6));
}

#[test]
fn calculators() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.json",
        r#"{"w0": [1, 1], "w1": [1, 1], "p": "inf"}"#,
    );
    write(d.path(), "x.csv", "1\n1\n");
    let k = kit(
        &[
            "kfun", "--couple", "c.json", "--x", "x.csv", "--t", "0.5,1,2",
        ],
        d.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&k.stdout).unwrap();
    let ks: Vec<f64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert_eq!(ks, vec![0.5, 1.0, 1.0]);
    let j = kit(
        &["jfun", "--couple", "c.json", "--x", "x.csv", "--t", "2"],
        d.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v[0]["value"], 2.0);

    write(
        d.path(),
        "lad.json",
        r#"{"lambda_adic": {"lambda": 2, "k_min": -1, "k_max": 1}, "p": 1}"#,
    );
    let p = kit(
        &["partition", "--couple", "lad.json", "--lambda", "2"],
        d.path(),
    );
    let v: serde_json::Value = serde_json::from_slice(&p.stdout).unwrap();
    assert_eq!(v, serde_json::json!({"-1": [-1], "0": [0], "1": [1]}));

    write(d.path(), "c.csv", "k,value\n0,1\n");
    let c = kit(&["calderon", "--input", "c.csv", "--lambda", "2"], d.path());
    assert_eq!(stdout(&c), "j,omega\n0,1\n");
}
