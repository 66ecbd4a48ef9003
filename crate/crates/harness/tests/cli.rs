use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn vortexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexlab"))
        .args(args)
        .env("VORTEXLAB_THREADS", "2")
        .output()
        .expect("spawning vortexlab")
}

fn tiny_sweep(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.json");
    fs::write(
        &path,
        r#"{
  "name": "tiny",
  "description": "small corotating pair",
  "vortices": [
    {"center": [0.5, 0.0], "gamma": 1.0, "profile": "compact_bump", "sigma": 4},
    {"center": [-0.5, 0.0], "gamma": 1.0, "profile": "gaussian"}
  ],
  "epsilon_sweep": [0.2, 0.15, 0.1],
  "grid": {"h_over_eps": 0.25, "mass_capture": 0.9999},
  "sim": {"t_end": 0.06, "dt": 0.01, "record_every": 2},
  "diagnostics": {"outer_radii": [0.3], "ring_radii": [0.3], "fractions": [0.99], "a": 0.45, "q": 4, "c0": 0.1, "outside_exponent": 0.2, "snapshot_every": 1}
}
"#,
    )
    .unwrap();
    path
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    ["0.2", "0.15", "0.1"].iter().map(|e| out.join("tiny").join(format!("eps_{e}"))).collect()
}

#[test]
fn sweep_writes_manifests_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_sweep(tmp.path());
    let out = tmp.path().join("runs");
    let o = vortexlab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    for dir in run_dirs(&out) {
        let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["format"], "vortexlab-run");
        assert_eq!(m["outcome"], "completed");
        assert_eq!(m["steps"], 6);
        assert_eq!(m["records"], 4);
        let files = m["files"].as_array().unwrap();
        assert!(files.iter().filter(|f| f.as_str().unwrap().ends_with(".csv")).count() >= 2);
        for f in files {
            assert!(dir.join(f.as_str().unwrap()).is_file(), "{f} missing in {}", dir.display());
        }
        let schema: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.schema.json")).unwrap()).unwrap();
        let csv = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        let columns = schema["columns"].as_array().unwrap();
        assert_eq!(columns.len(), header.len());
        for (c, h) in columns.iter().zip(&header) {
            assert_eq!(c["name"].as_str().unwrap(), *h);
        }
        assert_eq!(csv.lines().count(), 5);
    }

    let dirs = run_dirs(&out);
    let report = |order: &[usize], name: &str| {
        let path = tmp.path().join(name);
        let mut args = vec!["report".to_string()];
        args.extend(order.iter().map(|&i| dirs[i].to_str().unwrap().to_string()));
        args.extend(["--out".to_string(), path.to_str().unwrap().to_string()]);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = vortexlab(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(path).unwrap()
    };
    let a = report(&[0, 1, 2], "a.json");
    let b = report(&[2, 0, 1], "b.json");
    assert_eq!(a, b);
    let r: Value = serde_json::from_str(&a).unwrap();
    let eps: Vec<f64> = r["members"].as_array().unwrap().iter().map(|m| m["epsilon"].as_f64().unwrap()).collect();
    assert_eq!(eps, [0.2, 0.15, 0.1]);

    let o = vortexlab(&[
        "report",
        dirs[0].to_str().unwrap(),
        dirs[1].to_str().unwrap(),
        "--out",
        tmp.path().join("c.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("3"));
}

#[test]
fn serial_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_sweep(tmp.path());
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("r{k}"));
        let o = vortexlab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--serial"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let dir = &run_dirs(&out)[2];
        csvs.push((
            fs::read(dir.join("diagnostics.csv")).unwrap(),
            fs::read(dir.join("snapshots/snap_0003.csv")).unwrap(),
        ));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn coincident_centers_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_sweep(tmp.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("[-0.5, 0.0]", "[0.5, 0.0]");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("runs");
    let o = vortexlab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("coincident centers"), "{err}");
    assert!(err.contains("line 6"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_sweep(tmp.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("\"record_every\"", "\"record_evry\"");
    fs::write(&cfg, text).unwrap();
    let o = vortexlab(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("record_evry"));
}

#[test]
fn pair_translate_runs_to_completion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let o = vortexlab(&["run", "pair-translate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.join("pair-translate").join("eps_0.05");
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["outcome"], "completed");
    assert_eq!(m["t_end"], 1.0);
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().filter(|f| f.as_str().unwrap().ends_with(".csv")).count() >= 2);
    for f in files {
        assert!(dir.join(f.as_str().unwrap()).is_file());
    }
}

#[test]
fn scenarios_list_and_show() {
    let o = vortexlab(&["scenarios", "list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["pair-translate", "corotate", "single-cauchy", "sweep-concentration", "long-time"] {
        assert!(text.contains(name), "{name}");
    }
    let o = vortexlab(&["scenarios", "show", "corotate"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["name"], "corotate");
    let o = vortexlab(&["scenarios", "show", "nope"]);
    assert!(!o.status.success());
}

#[test]
fn accept_list_names_every_criterion() {
    let o = vortexlab(&["accept", "list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().any(|l| l.starts_with("determinism")));
}
