use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fluxlat"));
    c.env_remove("FLUXLAT_SEED");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(dir: &Path, cfg: &Path, out: &str, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn validate_mode_on_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    let o = run(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&dir.path().join("out/validate.json"));
    let q = &doc["quantities"];
    assert_eq!(q["m0"], 2.0);
    assert_eq!(q["m1"], 2.0);
    assert!((q["gap"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((q["chi"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn zero_hop_is_rejected_with_its_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"hopping": [{"zeta": [1], "re": 1}, {"zeta": [-1], "re": 1}, {"zeta": [0], "re": 0.5}]}}"#,
    );
    let o = run(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["key"], "model.hopping[2].zeta");
    assert!(!dir.path().join("out").exists(), "nothing is written on a validation failure");
}

#[test]
fn validation_catches_cross_field_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"model": {"disorder": {"kind": "uniform", "lambda": 1}}, "run": {"mode": "diffusion"}}"#, "model.disorder.kind"),
        (r#"{"run": {"mode": "simulate", "samples": 50}}"#, "run.samples"),
        (r#"{"run": {"mode": "diffusion", "method": "tauberian", "eta_grid": [1e-3, 1e-2]}}"#, "run.eta_grid"),
        (r#"{"run": {"mode": "clt", "clt_times": [3.3]}}"#, "run.clt_times"),
        (r#"{"run": {"mode": "simulate", "dt": 2.0}}"#, "run.dt"),
        (r#"{"model": {"extent": 12}, "run": {"mode": "diffusion"}}"#, "model.extent"),
        (r#"{"model": {"hopping": [{"zeta": [1], "re": 1, "im": 1}, {"zeta": [-1], "re": 1, "im": 1}]}}"#, "model.hopping[0].zeta"),
        (r#"{"run": {"mode": "smallg", "g_grid": [0.1]}}"#, "run.g_grid"),
        (r#"{"run": {"mode": "diffusion", "g": 0}}"#, "run.g"),
        (r#"{"noise": {"gamma": -1}}"#, "noise.gamma"),
        (r#"{"run": {"mode": "warp"}}"#, "config"),
        (r#"{"runn": {}}"#, "runn"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), body);
        let o = bin().arg("validate").arg(&cfg).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{body}");
        let e = stderr_json(&o);
        assert_eq!(e["exit_code"], 2);
        if *key != "config" {
            assert_eq!(e["key"], *key, "{body}: {e}");
        }
    }
}

#[test]
fn validate_command_materializes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"mode": "simulate"}}"#);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &doc["config"];
    assert_eq!(c["model"]["hopping"].as_array().unwrap().len(), 2);
    assert_eq!(c["noise"]["chain"]["rates"], serde_json::json!([[-1.0, 1.0], [1.0, -1.0]]));
    // 0.05 / (m0 + λ + g) with m0 = 2, λ = 1, g = 1
    assert!((c["run"]["dt"].as_f64().unwrap() - 0.0125).abs() < 1e-15);
    assert_eq!(c["run"]["checkpoints"].as_array().unwrap().len(), 20);
    assert_eq!(c["run"]["fit_window"], serde_json::json!([5.0, 10.0]));
    // the materialized document is itself a valid config that materializes to the same thing
    let again = write(dir.path(), "again.json", &c.to_string());
    let o2 = bin().arg("validate").arg(&again).output().unwrap();
    assert_eq!(o2.status.code(), Some(0));
    let doc2: Value = serde_json::from_slice(&o2.stdout).unwrap();
    assert_eq!(doc2["config"], *c);
}

#[test]
fn repeated_runs_are_byte_identical_and_stamped() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"model": {"extent": 16}, "run": {"mode": "simulate", "T": 2, "samples": 128}}"#;
    let cfg = write(dir.path(), "c.json", body);
    for (out, w) in [("a", "1"), ("b", "3")] {
        let o = run(dir.path(), &cfg, out, &["--workers", w]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let hash = fluxlat::sha256_hex(body.as_bytes());
    let manifest = read_json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["config_hash"], hash);
    assert_eq!(manifest["workers"], 1);
    for f in manifest["files"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains(&hash), "{f} lacks the config hash");
    }
    let leftovers: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn seed_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"model": {"extent": 8}, "run": {"mode": "simulate", "T": 1, "samples": 100}}"#);
    let o = bin()
        .env("FLUXLAT_SEED", "77")
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("s"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m = read_json(&dir.path().join("s/manifest.json"));
    assert_eq!(m["master_seed"], 77);
    assert_eq!(m["seed_source"], "FLUXLAT_SEED");
    assert_eq!(m["config"]["seed"]["master"], 77);
    let bad = bin().env("FLUXLAT_SEED", "seven").arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn budget_abort_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"extent": 64}, "run": {"mode": "simulate", "T": 20, "samples": 20000, "budget_seconds": 1e-6}}"#,
    );
    let o = run(dir.path(), &cfg, "out", &["--workers", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "budget");
    assert!(!dir.path().join("out/simulate.json").exists());
}

#[test]
fn degenerate_hopping_is_an_invariant_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"dimension": 2, "extent": 4, "hopping": [{"zeta": [1, 0], "re": 1}, {"zeta": [-1, 0], "re": 1}]}}"#,
    );
    let o = run(dir.path(), &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "invariant");
    // the report is still written
    assert!(dir.path().join("out/validate.json").exists());
}

#[test]
fn compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"mode": "noise-audit"}}"#);
    assert_eq!(run(dir.path(), &cfg, "n", &[]).status.code(), Some(0));
    let v = write(dir.path(), "v.json", "{}");
    assert_eq!(run(dir.path(), &v, "v", &[]).status.code(), Some(0));
    let a = dir.path().join("n/noise_audit.json");
    let o = bin().arg("compare").arg(&a).arg(&a).args(["--tol", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep["diffs"].as_array().unwrap().iter().all(|d| d["abs_diff"] == 0.0));
    let o = bin()
        .arg("compare")
        .arg(&a)
        .arg(dir.path().join("v/validate.json"))
        .args(["--tol", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("incomparable"));
}
