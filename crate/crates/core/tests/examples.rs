//! Runs every cargo example and drives the command-line binary end to end.

use std::path::{Path, PathBuf};
use std::process::Command;

const EXAMPLES: [&str; 7] = [
    "dirichlet_cells",
    "canonical_scaling",
    "generatrix",
    "voronoi_reduction",
    "pipeline",
    "export_surface",
    "belts",
];

fn examples_dir() -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

fn jobs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/jobs")
}

/// `cargo test` builds examples, but a filtered run such as `--test examples` does not.
fn ensure_built(dir: &Path) {
    if EXAMPLES.iter().all(|n| dir.join(n).exists()) {
        return;
    }
    let mut cmd = Command::new(env!("CARGO"));
    cmd.args(["build", "--examples", "-p", "liftile"]);
    if dir.parent().and_then(|p| p.file_name()).is_some_and(|n| n == "release") {
        cmd.arg("--release");
    }
    assert!(cmd.status().unwrap().success(), "building examples failed");
}

#[test]
fn examples_run_successfully() {
    let dir = examples_dir();
    ensure_built(&dir);
    let out = tempfile::tempdir().unwrap();
    for name in EXAMPLES {
        let mut cmd = Command::new(dir.join(name));
        if name == "export_surface" {
            cmd.arg(out.path());
        }
        let result = cmd.output().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(result.status.success(), "{name}: {}", String::from_utf8_lossy(&result.stderr));
        assert!(!result.stdout.is_empty(), "{name} printed nothing");
    }
    assert!(out.path().join("hexagon-surface.obj").exists());
    assert!(!out.path().join("bcc-surface.obj").exists());
}

fn liftile(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_liftile")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_stages_chain_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = jobs().join("hexagon.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");

    let r = liftile(&["scale", "--spec", path_str(&spec), "--out", path_str(&a)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let r = liftile(&["lift", "--spec", path_str(&a.join("invariant.json")), "--out", path_str(&b)]);
    assert!(r.status.success());
    let r = liftile(&["verify", "--spec", path_str(&b.join("validate.json")), "--out", path_str(&c)]);
    assert!(r.status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(c.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["stages"][2]["status"], "skipped");

    let r = liftile(&["export", "--spec", path_str(&a.join("invariant.json")), "--out", path_str(&c), "--format", "table"]);
    assert!(r.status.success());
    let table = std::fs::read_to_string(c.join("cells.csv")).unwrap();
    assert!(table.starts_with("cell,coord_0,coord_1,center_0,center_1,gradient_0,gradient_1,offset\n"));
}

#[test]
fn cli_pipeline_writes_declared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let r = liftile(&["pipeline", "--spec", path_str(&jobs().join("hexagon.json")), "--out", path_str(dir.path())]);
    assert!(r.status.success());
    for f in ["hexagon.obj", "hexagon.csv", "hexagon.svg", "verify.json", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn cli_reports_stage_exit_codes() {
    let r = liftile(&["pipeline", "--spec", path_str(&jobs().join("hexagon_perturbed.json"))]);
    assert_eq!(r.status.code(), Some(liftile::job::Stage::Generatrix.exit_code()));
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["failed_stage"], "generatrix");

    let dir = tempfile::tempdir().unwrap();
    let r = liftile(&["export", "--spec", path_str(&jobs().join("bcc.json")), "--out", path_str(dir.path()), "--format", "mesh"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("dimension 2"));

    let r = liftile(&["pipeline", "--spec", "/nonexistent/job.json"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn cli_seed_and_tolerance_overrides() {
    let spec = jobs().join("square_unit.json");
    let a = liftile(&["pipeline", "--spec", path_str(&spec), "--seed", "5"]);
    let b = liftile(&["pipeline", "--spec", path_str(&spec), "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let loose = Command::new(env!("CARGO_BIN_EXE_liftile"))
        .args(["pipeline", "--spec", path_str(&spec)])
        .env("LIFTILE_TOL", "1e-7")
        .output()
        .unwrap();
    assert!(loose.status.success());
}
