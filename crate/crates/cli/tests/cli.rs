use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lmcf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmcf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn make_soliton_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("jlt");
    let r = lmcf(&["make-soliton", "--family", "jlt", "--h", "0.1"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["report.json", "summary.txt", "patch.csv", "curve.csv", "family.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let patch = fs::read_to_string(out.join("patch.csv")).unwrap();
    let mut lines = patch.lines();
    assert_eq!(lines.next(), Some("# surface-patch v1"));
    assert_eq!(lines.next(), Some("u,v,x1,y1,x2,y2,theta,mean_curvature_norm"));
    let curve = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("# planar-curve v1\nx,y\n"));
    let family: Value = serde_json::from_str(&fs::read_to_string(out.join("family.json")).unwrap()).unwrap();
    for key in ["kind", "alpha", "shoot", "window"] {
        assert!(family.get(key).is_some(), "family.json lacks {key}");
    }
    let rep = report(&out);
    assert_eq!(rep["config"]["seed"], 42);
    assert_eq!(rep["config"]["family"]["kind"], "jlt_translator");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "density",
        "--family",
        "jlt",
        "--h",
        "0.1",
        "--times=-1,0",
        "--random-centers",
        "2",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(lmcf(&args, &a).status.code(), Some(0));
    assert_eq!(lmcf(&args, &b).status.code(), Some(0));
    assert_eq!(files(&a), files(&b));
}

#[test]
fn seed_changes_random_centers() {
    let tmp = tempfile::tempdir().unwrap();
    let base = [
        "density",
        "--family",
        "plane",
        "--h",
        "0.1",
        "--times=0",
        "--random-centers",
        "1",
    ];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    lmcf(&base, &a);
    let mut with_seed = base.to_vec();
    with_seed.extend(["--seed", "7"]);
    lmcf(&with_seed, &b);
    assert_ne!(report(&a)["centers"], report(&b)["centers"]);
}

#[test]
fn config_and_flags_agree_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"family":{"kind":"plane","alpha":0.2},"laplace_r":[0,100],"refine":false}"#,
    )
    .unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let from_config = lmcf(&["barrier", "--config", cfg.to_str().unwrap()], &a);
    assert_eq!(from_config.status.code(), Some(0));
    lmcf(
        &[
            "barrier",
            "--family",
            "plane",
            "--alpha",
            "0.2",
            "--laplace-r",
            "0,100",
            "--refine",
            "false",
        ],
        &b,
    );
    assert_eq!(files(&a), files(&b));

    lmcf(&["barrier", "--config", cfg.to_str().unwrap(), "--alpha", "0.5"], &c);
    assert_eq!(report(&c)["config"]["family"]["alpha"], 0.5);
    assert_eq!(report(&c)["config"]["laplace_r"], serde_json::json!([0.0, 100.0]));
}

#[test]
fn validation_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let r = lmcf(&["barrier", "--exponent", "0.4"], &tmp.path().join("a"));
    assert_eq!(r.status.code(), Some(1));
    let r = lmcf(
        &["make-soliton", "--family", "expander", "--t=-1"],
        &tmp.path().join("b"),
    );
    assert_eq!(r.status.code(), Some(1));
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    let r = lmcf(&["levelsets", "--config", cfg.to_str().unwrap()], &tmp.path().join("c"));
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("no_such_key"));
}

#[test]
fn numerical_failures_name_the_probe() {
    let tmp = tempfile::tempdir().unwrap();
    let r = lmcf(
        &["make-soliton", "--family", "jlt", "--window=-1e7,1e7,-1,1"],
        &tmp.path().join("a"),
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("probe `evaluate`"));
}

#[test]
fn violated_invariants_still_write_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let r = lmcf(
        &["verify", "--family", "grim", "--h", "0.05", "--tolerance", "1e-300"],
        &out,
    );
    assert_eq!(r.status.code(), Some(3));
    let rep = report(&out);
    assert_eq!(rep["passed"], false);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("FAIL"));
}

#[test]
fn flow_curve_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("circle");
    let r = lmcf(&["flow-curve", "--preset", "circle", "--points", "40"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    let fin = fs::read_to_string(out.join("final.csv")).unwrap();
    assert!(fin.starts_with("# planar-curve v1\nx,y\n"));
    let line = fin.lines().nth(2).unwrap();
    assert!(line.split(',').all(|f| f.contains('e')), "{line}");
}
