//! End-to-end tests of the `dhlab` binary: exit codes, artifact layout
//! and reproducibility.

use dhlab_core::bubble::elliptic_bubble;
use dhlab_core::save_state;
use dhlab_core::sphere::{MapField, SpinorAlongMap};
use dhlab_core::Grid;
use std::path::Path;
use std::process::{Command, Output};

fn dhlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn check_passes_and_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dhlab(&["check"], dir.path());
    assert!(out.status.success(), "check failed: {}", stderr(&out));

    let out = dhlab(&["check", "--json"], dir.path());
    assert!(out.status.success());
    let results: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = results.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["pass"].as_bool().unwrap()));
}

#[test]
fn injected_fault_names_the_failing_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dhlab"))
        .arg("check")
        .env("DHLAB_FAULT", "g2_sign")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("clifford anticommutation"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", "{ \"version\": 1, \"grid\": { \"bad\": 3 } }");
    let out = dhlab(&["solve", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad"));

    write(dir.path(), "notjson.json", "not json at all");
    let out = dhlab(&["solve", "--config", "notjson.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsupported_version_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "v9.json",
        r#"{
  "version": 9,
  "grid": { "topology": "torus", "lx": 1.0, "ly": 1.0, "nx": 16, "ny": 16 },
  "task": { "kind": "harmonic", "start": { "kind": "bubble", "center": [0.0, 0.0], "lambda": 0.2 } }
}"#,
    );
    let out = dhlab(&["solve", "--config", "v9.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("version"));
}

#[test]
fn solve_harmonic_writes_trace_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "solve.json",
        r#"{
  "version": 1,
  "grid": { "topology": "rectangle", "lx": 8.0, "ly": 8.0, "nx": 32, "ny": 32 },
  "solver": { "max_iters": 20 },
  "task": { "kind": "harmonic", "start": { "kind": "bubble", "center": [0.0, 0.0], "lambda": 1.0 } }
}"#,
    );
    let out = dhlab(&["solve", "--config", "solve.json", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    // Missing output directory is created and noted.
    assert!(stderr(&out).contains("created output directory"));
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("iter,e_map,e_spinor,residual_map,residual_spinor\n"));
    assert_eq!(trace.lines().count(), 21);
    assert!(dir.path().join("run/final.snap").is_file());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run/summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["energy"]["e_map"].as_f64().unwrap() > 1.0);
}

#[test]
fn vanishing_probe_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "probe.json",
        r#"{
  "version": 1,
  "grid": { "topology": "torus", "lx": 1.0, "ly": 1.0, "nx": 16, "ny": 16 },
  "solver": { "max_iters": 2000, "tol": 1e-9, "seed": 7 },
  "task": { "kind": "vanishing_probe", "energy_budget": 0.05, "trials": 2, "init": "random_fourier" }
}"#,
    );
    let out = dhlab(&["solve", "--config", "probe.json", "--out", "a"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("2/2 constant"));
    let out = dhlab(&["solve", "--config", "probe.json", "--out", "b"], dir.path());
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("a/probe.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/probe.csv")).unwrap();
    assert_eq!(a, b, "identical config + seed must give identical CSV bytes");
}

#[test]
fn bubble_identity_table_has_one_row_per_scale() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bubble.json",
        r#"{
  "version": 1,
  "grid": { "topology": "rectangle", "lx": 8.0, "ly": 8.0, "nx": 256, "ny": 256 },
  "experiment": { "kind": "energy_identity", "center": [0.0, 0.0], "lambdas": [0.4, 0.2, 0.1], "delta": 0.5, "r_big": 5.0 }
}"#,
    );
    let out = dhlab(&["bubble", "--config", "bubble.json", "--out", "bub"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("bub/identity.csv")).unwrap();
    assert!(csv.starts_with("lambda,delta,R,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn two_bubble_config_yields_two_clusters() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "blowup.json",
        r#"{
  "version": 1,
  "grid": { "topology": "rectangle", "lx": 8.0, "ly": 8.0, "nx": 128, "ny": 128 },
  "experiment": { "kind": "blowup_set", "bubbles": [
    { "center": [-1.5, 0.0], "lambda": 0.2 },
    { "center": [1.5, 0.0], "lambda": 0.2 } ], "eps0": 1.0, "radius": 0.5 }
}"#,
    );
    let out = dhlab(&["bubble", "--config", "blowup.json", "--out", "blow"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("blow/blowup.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["clusters"].as_array().unwrap().len(), 2);
}

#[test]
fn conserve_refinement_and_topology_gate() {
    let dir = tempfile::tempdir().unwrap();
    // Two torus snapshots of the same concentrating map at h and h/2.
    for nx in [64usize, 128] {
        let grid = Grid::torus(16.0, 16.0, nx, nx).unwrap();
        let phi = elliptic_bubble(&grid, 2.0).unwrap();
        save_state(dir.path().join(format!("b{nx}.snap")), &phi, None).unwrap();
    }
    let out = dhlab(
        &["conserve", "b64.snap", "b128.snap", "--wente", "--out", "ref"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv =
        std::fs::read_to_string(dir.path().join("ref/divergence_refinement.csv")).unwrap();
    assert!(csv.starts_with("h,norm,ratio\n"));
    assert_eq!(csv.lines().count(), 3);
    let ratio: f64 = csv.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(ratio > 3.0, "refinement ratio {ratio} not near second order");
    assert!(dir.path().join("ref/wente_refinement.csv").is_file());

    // Constant map: all residuals identically zero.
    let grid = Grid::torus(1.0, 1.0, 16, 16).unwrap();
    let phi = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
    let psi = SpinorAlongMap::zeros(&grid, 2);
    save_state(dir.path().join("const.snap"), &phi, Some(&psi)).unwrap();
    let out = dhlab(&["conserve", "const.snap", "--json", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows[0]["divergence"].as_f64().unwrap(), 0.0);

    // Rectangle snapshot with the potential step requested: exit 4.
    let grid = Grid::rectangle(8.0, 8.0, 16, 16).unwrap();
    let phi = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
    save_state(dir.path().join("rect.snap"), &phi, None).unwrap();
    let out = dhlab(&["conserve", "rect.snap", "--wente", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("torus"));
}
