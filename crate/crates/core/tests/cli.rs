use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_smoothfix"));
    c.env_remove("SMOOTHFIX_WORKERS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn numbers_covered(v: &Value, path: &str, provenance: &serde_json::Map<String, Value>) -> bool {
    match v {
        Value::Number(_) => provenance.contains_key(path),
        Value::Array(items) => items.iter().enumerate().all(|(i, x)| numbers_covered(x, &format!("{path}/{i}"), provenance)),
        Value::Object(m) if m.contains_key("provenance") => true,
        Value::Object(m) => m.iter().all(|(k, x)| numbers_covered(x, &format!("{path}/{k}"), provenance)),
        _ => true,
    }
}

const GEOMETRIC: &str = r#"{"kind": "random_count_fixed_weight", "count": {"law": "geometric", "q": 0.5}, "weight": 0.5}"#;

#[test]
fn criteria_report_is_complete() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&configs().join("criteria_geometric.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["artifact"]["name"], "smoothfix");
    assert_eq!(r["artifact"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"], "criteria");
    assert!(r["config"].get("output").is_none());
    assert_eq!(r["results"]["criteria"]["exists"], true);
    let provenance = r["provenance"].as_object().unwrap();
    assert!(numbers_covered(&r["results"], "", provenance));
    for f in r["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn oscillating_model_is_a_verdict_failure() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&configs().join("criteria_oscillating.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = read_report(&out);
    assert_eq!(r["results"]["criteria"]["exists"], false);
    assert_eq!(r["status"], "verdict-negative");
}

#[test]
fn malformed_config_leaves_no_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for (name, body) in [
        ("broken.json", r#"{"command": "criteria", "seed": "#),
        ("unknown.json", r#"{"command": "criteria", "seed": 1, "colour": 3}"#),
        ("nomodel.json", r#"{"command": "simulate", "seed": 1}"#),
    ] {
        let config = write_config(tmp.path(), name, body);
        assert_eq!(run(&config, &out, &[]).status.code(), Some(2), "{name}");
        assert!(!out.exists());
    }
    assert_eq!(run(&tmp.path().join("missing.json"), &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn zero_workers_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let config = configs().join("criteria_geometric.json");
    assert_eq!(run(&config, &out, &["--workers", "0"]).status.code(), Some(2));
    let o = bin().arg("run").arg(&config).arg("--out").arg(&out).env("SMOOTHFIX_WORKERS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "sim.json",
        &format!(r#"{{"command": "simulate", "seed": 1, "model": {GEOMETRIC}, "budgets": {{"replicas": 500}}, "parameters": {{"generations": 4}}}}"#),
    );
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(run(&config, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&config, &b, &["--seed", "1"]).status.code(), Some(0));
    assert_eq!(run(&config, &c, &["--seed", "2"]).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("samples.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read_report(&c)["config"]["seed"], 2);
}

#[test]
fn iterate_lst_writes_the_exponential_transform() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&configs().join("iterate_lst_geometric.json"), &out, &[]).status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("lst.csv")).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("s,phi,one_minus_phi"));
    let mut count = 0;
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 1.0 / (1.0 + v[0])).abs() < 1e-6, "{row}");
        assert!((v[2] - v[0] / (1.0 + v[0])).abs() < 1e-6, "{row}");
        count += 1;
    }
    assert!(count >= 64);
}

#[test]
fn report_compares_sample_files() {
    let tmp = TempDir::new().unwrap();
    let grid = |n: usize, f: &dyn Fn(f64) -> f64| -> String {
        let mut s = String::from("value\n");
        for i in 0..n {
            s.push_str(&format!("{}\n", f((i as f64 + 0.5) / n as f64)));
        }
        s
    };
    let n = 20_000;
    // quantile grids of Exp(1), Gamma(2, 1) and a distant point
    let exp = write_config(tmp.path(), "exp.csv", &grid(n, &|u| -(1.0 - u).ln()));
    let gamma_q = |u: f64| {
        let (mut lo, mut hi) = (0.0f64, 60.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - (1.0 + mid) * (-mid).exp() < u { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    };
    let gamma = write_config(tmp.path(), "gamma.csv", &grid(n, &gamma_q));
    let far = write_config(tmp.path(), "far.csv", &grid(100, &|_| 1000.0));
    let ks = |a: &Path, b: &Path| -> f64 {
        let o = bin().arg("report").arg(a).arg(b).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["ks"].as_f64().unwrap()
    };
    assert_eq!(ks(&exp, &exp), 0.0);
    assert!((ks(&exp, &gamma) - (-1.0f64).exp()).abs() < 1e-3);
    assert!((ks(&exp, &far) - 1.0).abs() < 1e-9);
    let o = bin().arg("report").arg(&exp).arg(tmp.path().join("none.csv")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn worker_count_does_not_change_outputs() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "sim.json",
        &format!(r#"{{"command": "simulate", "seed": 3, "model": {GEOMETRIC}, "budgets": {{"replicas": 3000}}, "parameters": {{"generations": 8}}}}"#),
    );
    let (a, b) = (tmp.path().join("one"), tmp.path().join("eight"));
    assert_eq!(run(&config, &a, &["--workers", "1"]).status.code(), Some(0));
    let o = bin().arg("run").arg(&config).arg("--out").arg(&b).env("SMOOTHFIX_WORKERS", "8").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["report.json", "samples.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
