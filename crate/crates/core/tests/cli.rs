use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn randers(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randers")).args(args).output().expect("binary runs")
}

fn export(dir: &Path, id: &str) -> PathBuf {
    let path = dir.join(format!("{id}.json"));
    let out = randers(&["gallery", "--export", id, "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn check_exit_codes_follow_the_outcome() {
    let dir = TempDir::new().unwrap();
    let trivial = export(dir.path(), "trivial-pair");
    let out = randers(&["check", trivial.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outcome"], "ProportionalGlobal");
    assert!((v["const"].as_f64().unwrap() - 2.0).abs() < 1e-6);

    let reversal = export(dir.path(), "reversal-pair");
    let out = randers(&["check", reversal.to_str().unwrap(), "--mode", "oriented"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["outcome"], "Refuted");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("refuted: "));

    let out = randers(&["check", reversal.to_str().unwrap(), "--mode", "unoriented"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outcome"], "MixedSigns");
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"dimension": 2, "domain": {"box": [[-1, 1], [-1, 1]]},
            "g": [["1", "0"], ["0", "x1"]], "omega": ["0", "0"], "grid": 5}"#,
    )
    .unwrap();
    let out = randers(&["flat", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not positive definite at (-0.9692307692307692, -0.9692307692307692)"), "{err}");
    assert!(out.stdout.is_empty());

    std::fs::write(&path, "{\"dimension\": 2").unwrap();
    assert_eq!(randers(&["flat", path.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(randers(&["flat", "/nonexistent/problem.json"]).status.code(), Some(1));
    assert_eq!(randers(&["gallery", "--export", "nope"]).status.code(), Some(1));

    let single = export(dir.path(), "sphere");
    let out = randers(&["check", single.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g_bar"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let path = export(dir.path(), "example-2");
    let args = ["check", path.to_str().unwrap(), "--mode", "unoriented", "--seed", "7"];
    let (a, b) = (randers(&args), randers(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["outcome"], "MixedSigns");
}

#[test]
fn trace_writes_csv() {
    let dir = TempDir::new().unwrap();
    let path = export(dir.path(), "constant-field");
    let csv = dir.path().join("curve.csv");
    let out = randers(&[
        "trace",
        path.to_str().unwrap(),
        "--from",
        "0,-0.2",
        "--dir",
        "1,0",
        "--orientation",
        "bwd",
        "--T",
        "0.5",
        "--h",
        "0.01",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2,v1,v2,gspeed,F");
    assert_eq!(rows.len(), 51);
    assert_eq!(&rows[0][..5], &[0.0, 0.0, -0.2, 1.0, 0.0]);
    assert!((rows[50][0] - 0.5).abs() < 1e-12);
    // The Riemannian speed is conserved along the flow.
    assert!(rows.iter().all(|r| (r[5] - 1.0).abs() < 1e-8));

    let stdout = randers(&["trace", path.to_str().unwrap(), "--from", "0,0", "--dir", "0,1", "--T", "0.1", "--h", "0.05"]);
    assert!(stdout.status.success());
    assert_eq!(String::from_utf8_lossy(&stdout.stdout).lines().count(), 4);
}

#[test]
fn gallery_lists_and_exports_every_instance() {
    let out = randers(&["gallery", "--list"]);
    assert!(out.status.success());
    let listed: Vec<String> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(listed, randers::gallery::INSTANCE_IDS);

    let out = randers(&["gallery", "--export", "hyperbolic"]);
    let v = json(&out);
    assert_eq!(v["dimension"], 2);
    assert_eq!(v["g"][1][1], "1/x2^2");
}

#[test]
fn flat_support_pullback_and_average() {
    let dir = TempDir::new().unwrap();
    let sphere = export(dir.path(), "sphere");
    let v = json(&randers(&["flat", sphere.to_str().unwrap()]));
    assert_eq!(v["projectively_flat"], true);
    assert!((v["curvature"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let ex2 = export(dir.path(), "example-2");
    let v = json(&randers(&["support", ex2.to_str().unwrap()]));
    assert_eq!(v["components"].as_array().unwrap().len(), 2);

    let flat = export(dir.path(), "flat-riemannian");
    let v = json(&randers(&["pullback", flat.to_str().unwrap(), "--map", "0.5*x2", "--map", "-0.5*x1"]));
    assert_eq!(v["is_homothety"], true);
    assert!((v["const"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let field = export(dir.path(), "flat-closed-form");
    let group = dir.path().join("group.json");
    std::fs::write(&group, r#"[["x1", "x2"], ["-x1", "x2"]]"#).unwrap();
    let v = json(&randers(&["average", field.to_str().unwrap(), "--group", group.to_str().unwrap()]));
    assert_eq!(v["group_order"], 2);
    assert!(v["invariance_residual"].as_f64().unwrap() < 1e-12);
}
