use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fockweyl"));
    c.env_remove("FOCKWEYL_OUT");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).output().unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn csv_header(out: &Path) -> String {
    std::fs::read_to_string(out.join("results.csv")).unwrap().lines().next().unwrap().to_string()
}

const COSINE: &str = r#"{
  "scenario": "quantize",
  "seed": 1,
  "symbol": { "kind": "cosine", "y": [0.8], "eta": [-0.3], "amp": 1.0 },
  "quantization": { "h": 0.5, "cap": 10, "quantizer": "weyl" }
}"#;

#[test]
fn constants_scenario_reports_schur_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "scenario": "constants-selftest" }"#);
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["status"], "pass");
    let c = s["values"]["schur_constant"].as_f64().unwrap();
    assert!((c - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for text in [
        "{ not json",
        r#"{ "scenario": "quantize", "bogus": 1 }"#,
        r#"{ "scenario": "no-such-scenario" }"#,
        r#"{ "scenario": "quantize", "symbol": { "kind": "cosine", "y": [0.8], "eta": [-0.3], "amp": 1.0 } }"#,
        r#"{ "scenario": "quantize", "symbol": { "kind": "cosine", "y": [0.8], "eta": [-0.3], "amp": 1.0 },
             "quantization": { "h": -1.0, "cap": 4 } }"#,
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = run(&cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!out.exists(), "{text} wrote output");
    }
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&tmp.path().join("absent.json"), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_scenarios_need_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for scenario in ["measure-mc", "bargmann-selftest"] {
        let cfg = write_config(tmp.path(), &format!(r#"{{ "scenario": "{scenario}" }}"#));
        assert_eq!(run(&cfg, &out).status.code(), Some(2));
        assert!(!out.exists());
    }
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), COSINE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&cfg, &a).status.code(), Some(0));
    assert_eq!(run(&cfg, &b).status.code(), Some(0));
    for f in ["results.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn quantize_writes_matrix_entries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), COSINE);
    let out = tmp.path().join("out");
    assert_eq!(run(&cfg, &out).status.code(), Some(0));
    assert_eq!(csv_header(&out), "row,col,alpha,beta,re,im");
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 11 * 11);
    let s = summary(&out);
    assert!(s["values"]["norm_lower"].as_f64().unwrap() <= s["values"]["bound"].as_f64().unwrap());
}

#[test]
fn verify_bound_for_a_cosine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "scenario": "verify-bound",
  "seed": 3,
  "symbol": { "kind": "cosine", "y": [0.5], "eta": [0.9], "amp": 1.0 },
  "h_values": [0.25, 1.0],
  "quantization": { "h": 1.0, "cap": 12 }
}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(summary(&out)["status"], "pass");
    assert!(csv_header(&out).contains("bound"));
}

#[test]
fn convergence_table_has_expected_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "scenario": "convergence",
  "seed": 41,
  "symbol": { "kind": "lattice_gaussian", "g": [1.0, 0.5, 0.25], "lambda": 0.3 },
  "quantization": { "h": 0.5, "cap": 5 }
}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(csv_header(&out), "n,est_norm_diff,diff_bound,ratio");
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "scenario": "constants-selftest" }"#);
    let env_dir = tmp.path().join("env");
    let o = bin().arg("run").arg(&cfg).env("FOCKWEYL_OUT", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("summary.json").exists());

    let flag_dir = tmp.path().join("flag");
    let env2 = tmp.path().join("env2");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&flag_dir).env("FOCKWEYL_OUT", &env2).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("summary.json").exists());
    assert!(!env2.exists());
}

#[test]
fn report_reproduces_run_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), COSINE);
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    let r = bin().arg("report").arg(out.join("summary.json")).output().unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(r.stdout, o.stdout);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("scenario quantize  seed 1  status pass"));
}

#[test]
fn report_rejects_garbage() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("summary.json");
    std::fs::write(&p, "[]").unwrap();
    assert_eq!(bin().arg("report").arg(&p).output().unwrap().status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "scenario": "constants-selftest", "seed": 5 }"#);
    let out = tmp.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).args(["--seed", "9"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&out)["seed"], 9);
}

#[test]
fn selftest_passes() {
    let o = bin().args(["selftest", "--threads", "1"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["selftest", "--threads", "0"]).output().unwrap().status.code(), Some(2));
}
