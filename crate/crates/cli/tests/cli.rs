use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermoflow"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("thermoflow-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn artifact_hashes(m: &Value) -> Vec<(String, String)> {
    m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["file"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn golden_mean_pressure_is_log_phi() {
    let out = scratch("pressure");
    let o = run(&["pressure"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let p = m["summary"]["spectral"]["value"].as_f64().unwrap();
    assert!((p - phi.ln()).abs() < 1e-10, "{p}");
    assert_eq!(m["command"], "pressure");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("pressure.csv").exists());
}

#[test]
fn rho_one_check_is_tight() {
    let out = scratch("rho-one");
    let o = run(&["verify", "rho-one", "--depth", "6"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let dev = m["summary"]["deviation"].as_f64().unwrap();
    assert!(dev <= 1e-6, "{dev}");
    assert!(m["system_hash"].is_string());
}

#[test]
fn usage_errors_exit_two_with_json() {
    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn runtime_errors_exit_one_with_kind() {
    let out = scratch("bad-tol");
    let o = run(&["pressure", "--tol=-1"], &out);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "parameter");
}

#[test]
fn config_file_is_honoured() {
    let dir = scratch("config");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("exp.json");
    std::fs::write(&cfg, r#"{"matrix": "full:3", "word_length": 3}"#).unwrap();
    let out = dir.join("out");
    let o = bin().args(["sft", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out)["summary"]["word_count"], 27);
}

#[test]
fn same_seed_gives_identical_artifacts_across_thread_counts() {
    let args = ["verify", "radon-nikodym", "--samples", "6", "--depth", "6", "--seed", "7"];
    let a = scratch("det-a");
    let b = scratch("det-b");
    let c = scratch("det-c");
    let oa = bin().args(args).arg("--out").arg(&a).env("THERMOFLOW_THREADS", "1").output().unwrap();
    let ob = bin().args(args).arg("--out").arg(&b).env("THERMOFLOW_THREADS", "4").output().unwrap();
    assert!(oa.status.success() && ob.status.success());
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["threads"], 1);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(artifact_hashes(&ma), artifact_hashes(&mb));
    let oc = bin().args(&args[..6]).args(["--seed", "8"]).arg("--out").arg(&c).output().unwrap();
    assert!(oc.status.success());
    assert_ne!(artifact_hashes(&ma), artifact_hashes(&manifest(&c)));
}

#[test]
fn volume_writes_fields_that_read_back() {
    let out = scratch("volume");
    let o = run(&["volume", "--grid", "32"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert!(m["summary"]["final_divergence"].as_f64().unwrap() <= 1e-8);
    // Feeding the written fields back reproduces the table exactly.
    let again = scratch("volume-again");
    let o = bin()
        .args(["volume", "--grid", "32", "--x0"])
        .arg(out.join("x0"))
        .arg("--h0")
        .arg(out.join("h0"))
        .arg("--out")
        .arg(&again)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(out.join("volume.csv")).unwrap(),
        std::fs::read(again.join("volume.csv")).unwrap()
    );
}
